#pragma once

#include "t3/bytes.hpp"
#include "t3/oram/block.hpp"
#include "t3/oram/common.hpp"

#include <filesystem>
#include <vector>

namespace t3::oram {

// Encrypted bucket tree. Every slot holds one AEAD-sealed block (real or
// dummy); a hash tree over the bucket ciphertexts mirrors the bucket tree,
// and its root lives only in trusted memory. The in-memory buffer is the
// exact on-disk image, so a snapshot copy equals a file copy.
class OramTree {
  public:
    static constexpr size_t kHeaderSize = 16;
    static constexpr char kMagic[9] = "T3TREEV1";
    static constexpr size_t kMhtHeaderSize = 16;
    static constexpr char kMhtMagic[9] = "T3MHTV01";

    // Builds an all-dummy tree: every slot sealed, full hash tree computed.
    OramTree(uint32_t capacity, uint32_t bucket_z, uint32_t payload_bytes, const Key256& key);

    uint32_t capacity() const { return capacity_; }
    uint32_t height() const { return height_; }
    uint32_t bucket_z() const { return bucket_z_; }
    uint32_t payload_bytes() const { return payload_bytes_; }
    size_t bucket_count() const { return (size_t(2) << height_) - 1; }

    size_t slot_plain_size() const { return 8 + payload_bytes_; }
    size_t slot_stride() const { return 12 + slot_plain_size() + 16; }
    size_t bucket_stride() const { return bucket_z_ * slot_stride(); }

    // Bucket indices from root to the leaf's bucket, heap order.
    std::vector<size_t> path_indices(uint32_t leaf) const;

    // Decrypts every bucket on the path and checks the recomputed hash chain
    // against the trusted root. Throws IntegrityViolation; tree unchanged.
    std::vector<std::vector<OramBlock>> read_path(uint32_t leaf) const;

    // Re-seals the path's buckets with fresh nonces (padding each to Z with
    // dummies) and updates the hash tree along the path.
    void write_path(uint32_t leaf, const std::vector<std::vector<OramBlock>>& buckets);

    const Hash256& root() const { return root_; }
    const Bytes& file_image() const { return image_; }

    void save(const std::filesystem::path& tree_file) const;
    void save_sidecar(const std::filesystem::path& mht_file) const;

    // Loads tree + sidecar, recomputes the full hash tree from the
    // ciphertexts, and requires it to match both the sidecar and, when given,
    // a trusted root carried in sealed state. Throws IntegrityViolation.
    static OramTree load(const std::filesystem::path& tree_file,
                         const std::filesystem::path& mht_file, uint32_t capacity,
                         uint32_t bucket_z, uint32_t payload_bytes, const Key256& key,
                         const Hash256* trusted_root);

  private:
    OramTree() = default;

    size_t bucket_offset(size_t idx) const { return kHeaderSize + idx * bucket_stride(); }
    Hash256 compute_node_hash(size_t idx) const;
    void seal_slot(size_t bucket_idx, size_t slot_idx, const OramBlock& block);
    OramBlock open_slot(size_t bucket_idx, size_t slot_idx) const;
    void rebuild_hash_tree();

    uint32_t capacity_ = 0;
    uint32_t height_ = 0;
    uint32_t bucket_z_ = 0;
    uint32_t payload_bytes_ = 0;
    Key256 key_{};
    Bytes image_;                    // header + sealed buckets, level order
    std::vector<Hash256> node_hash_; // heap order, one per bucket
    Hash256 root_{};
};

}  // namespace t3::oram
