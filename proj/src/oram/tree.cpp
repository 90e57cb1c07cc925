#include "t3/oram/tree.hpp"

#include "t3/crypto.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace t3::oram {

namespace {

// Slot AAD binds the ciphertext to its tree position; cross-slot swaps are
// additionally caught by the hash tree.
std::array<uint8_t, 12> slot_aad(size_t bucket_idx, size_t slot_idx) {
    std::array<uint8_t, 12> aad{};
    put_u64be(aad.data(), static_cast<uint64_t>(bucket_idx));
    put_u32be(aad.data() + 8, static_cast<uint32_t>(slot_idx));
    return aad;
}

void write_file(const std::filesystem::path& p, ByteSpan data) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw OramError("cannot open for write: " + p.string());
    f.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
    if (!f) throw OramError("short write: " + p.string());
}

uint32_t height_of(uint32_t capacity) {
    return static_cast<uint32_t>(std::bit_width(capacity) - 1);
}

Bytes read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary | std::ios::ate);
    if (!f) throw OramError("cannot open for read: " + p.string());
    auto size = f.tellg();
    f.seekg(0);
    Bytes data(static_cast<size_t>(size));
    f.read(reinterpret_cast<char*>(data.data()), size);
    if (!f) throw OramError("short read: " + p.string());
    return data;
}

}  // namespace

OramTree::OramTree(uint32_t capacity, uint32_t bucket_z, uint32_t payload_bytes,
                   const Key256& key)
    : capacity_(capacity),
      height_(height_of(capacity)),
      bucket_z_(bucket_z),
      payload_bytes_(payload_bytes),
      key_(key) {
    image_.assign(kHeaderSize + bucket_count() * bucket_stride(), 0);
    std::memcpy(image_.data(), kMagic, 8);
    put_u32be(image_.data() + 8, 1);
    put_u32be(image_.data() + 12, height_);
    OramBlock dummy = OramBlock::dummy(payload_bytes_);
    for (size_t b = 0; b < bucket_count(); ++b)
        for (size_t s = 0; s < bucket_z_; ++s) seal_slot(b, s, dummy);
    rebuild_hash_tree();
}

std::vector<size_t> OramTree::path_indices(uint32_t leaf) const {
    std::vector<size_t> idx(height_ + 1);
    for (uint32_t d = 0; d <= height_; ++d)
        idx[d] = (size_t(1) << d) - 1 + (leaf >> (height_ - d));
    return idx;
}

void OramTree::seal_slot(size_t bucket_idx, size_t slot_idx, const OramBlock& block) {
    Bytes plain(slot_plain_size());
    put_u32be(plain.data(), block.bid);
    put_u32be(plain.data() + 4, block.leaf);
    if (block.payload.size() != payload_bytes_) throw OramError("block payload size mismatch");
    std::memcpy(plain.data() + 8, block.payload.data(), payload_bytes_);

    std::array<uint8_t, crypto::kAeadNonceSize> nonce;
    crypto::random_bytes(nonce.data(), nonce.size());
    auto aad = slot_aad(bucket_idx, slot_idx);
    Bytes sealed = crypto::aead_seal(key_, nonce, plain, aad);

    uint8_t* out = image_.data() + bucket_offset(bucket_idx) + slot_idx * slot_stride();
    std::memcpy(out, nonce.data(), nonce.size());
    std::memcpy(out + nonce.size(), sealed.data(), sealed.size());
}

OramBlock OramTree::open_slot(size_t bucket_idx, size_t slot_idx) const {
    const uint8_t* in = image_.data() + bucket_offset(bucket_idx) + slot_idx * slot_stride();
    std::array<uint8_t, crypto::kAeadNonceSize> nonce;
    std::memcpy(nonce.data(), in, nonce.size());
    auto aad = slot_aad(bucket_idx, slot_idx);
    auto plain = crypto::aead_open(key_, nonce, ByteSpan(in + nonce.size(), slot_stride() - nonce.size()), aad);
    if (!plain || plain->size() != slot_plain_size())
        throw IntegrityViolation("bucket slot failed authenticated decryption");
    OramBlock b;
    b.bid = get_u32be(plain->data());
    b.leaf = get_u32be(plain->data() + 4);
    b.payload.assign(plain->begin() + 8, plain->end());
    return b;
}

Hash256 OramTree::compute_node_hash(size_t idx) const {
    // node = H(bucket ciphertext || left child hash || right child hash),
    // zero hashes below the leaves.
    Bytes buf;
    buf.reserve(bucket_stride() + 64);
    const uint8_t* ct = image_.data() + bucket_offset(idx);
    buf.insert(buf.end(), ct, ct + bucket_stride());
    size_t l = 2 * idx + 1, r = 2 * idx + 2;
    Hash256 zero{};
    const Hash256& hl = l < bucket_count() ? node_hash_[l] : zero;
    const Hash256& hr = r < bucket_count() ? node_hash_[r] : zero;
    buf.insert(buf.end(), hl.begin(), hl.end());
    buf.insert(buf.end(), hr.begin(), hr.end());
    return crypto::sha256(buf);
}

void OramTree::rebuild_hash_tree() {
    node_hash_.assign(bucket_count(), Hash256{});
    for (size_t i = bucket_count(); i-- > 0;) node_hash_[i] = compute_node_hash(i);
    root_ = node_hash_[0];
}

std::vector<std::vector<OramBlock>> OramTree::read_path(uint32_t leaf) const {
    if (leaf >= capacity_) throw OramError("leaf out of range");
    auto idx = path_indices(leaf);

    // Recompute the hash chain leaf-to-root using sibling hashes from the
    // (untrusted) node table; it must land on the trusted root.
    Hash256 cur{};
    for (size_t d = idx.size(); d-- > 0;) {
        size_t i = idx[d];
        Bytes buf;
        buf.reserve(bucket_stride() + 64);
        const uint8_t* ct = image_.data() + bucket_offset(i);
        buf.insert(buf.end(), ct, ct + bucket_stride());
        size_t l = 2 * i + 1, r = 2 * i + 2;
        Hash256 zero{};
        Hash256 hl = l < bucket_count() ? node_hash_[l] : zero;
        Hash256 hr = r < bucket_count() ? node_hash_[r] : zero;
        if (d + 1 < idx.size()) {
            // the on-path child's hash is the one just computed
            if (idx[d + 1] == l) hl = cur; else hr = cur;
        }
        buf.insert(buf.end(), hl.begin(), hl.end());
        buf.insert(buf.end(), hr.begin(), hr.end());
        cur = crypto::sha256(buf);
    }
    if (!ct_equal(ByteSpan(cur.data(), cur.size()), ByteSpan(root_.data(), root_.size())))
        throw IntegrityViolation("bucket hash chain does not match trusted root");

    std::vector<std::vector<OramBlock>> buckets(idx.size());
    for (size_t d = 0; d < idx.size(); ++d) {
        buckets[d].reserve(bucket_z_);
        for (size_t s = 0; s < bucket_z_; ++s) buckets[d].push_back(open_slot(idx[d], s));
    }
    return buckets;
}

void OramTree::write_path(uint32_t leaf, const std::vector<std::vector<OramBlock>>& buckets) {
    auto idx = path_indices(leaf);
    if (buckets.size() != idx.size()) throw OramError("write_path bucket count mismatch");
    OramBlock dummy = OramBlock::dummy(payload_bytes_);
    for (size_t d = 0; d < idx.size(); ++d) {
        if (buckets[d].size() > bucket_z_) throw OramError("bucket overfilled");
        for (size_t s = 0; s < bucket_z_; ++s)
            seal_slot(idx[d], s, s < buckets[d].size() ? buckets[d][s] : dummy);
    }
    for (size_t d = idx.size(); d-- > 0;) node_hash_[idx[d]] = compute_node_hash(idx[d]);
    root_ = node_hash_[0];
}

void OramTree::save(const std::filesystem::path& tree_file) const {
    write_file(tree_file, image_);
}

void OramTree::save_sidecar(const std::filesystem::path& mht_file) const {
    Bytes out(kMhtHeaderSize + bucket_count() * 32);
    std::memcpy(out.data(), kMhtMagic, 8);
    put_u32be(out.data() + 8, 1);
    put_u32be(out.data() + 12, height_);
    for (size_t i = 0; i < bucket_count(); ++i)
        std::memcpy(out.data() + kMhtHeaderSize + i * 32, node_hash_[i].data(), 32);
    write_file(mht_file, out);
}

OramTree OramTree::load(const std::filesystem::path& tree_file,
                        const std::filesystem::path& mht_file, uint32_t capacity,
                        uint32_t bucket_z, uint32_t payload_bytes, const Key256& key,
                        const Hash256* trusted_root) {
    OramTree t;
    t.capacity_ = capacity;
    t.height_ = height_of(capacity);
    t.bucket_z_ = bucket_z;
    t.payload_bytes_ = payload_bytes;
    t.key_ = key;
    t.image_ = read_file(tree_file);

    size_t want = kHeaderSize + t.bucket_count() * t.bucket_stride();
    if (t.image_.size() != want || std::memcmp(t.image_.data(), kMagic, 8) != 0 ||
        get_u32be(t.image_.data() + 8) != 1 || get_u32be(t.image_.data() + 12) != t.height_)
        throw IntegrityViolation("tree file header or size mismatch");

    t.rebuild_hash_tree();

    Bytes sidecar = read_file(mht_file);
    if (sidecar.size() != kMhtHeaderSize + t.bucket_count() * 32 ||
        std::memcmp(sidecar.data(), kMhtMagic, 8) != 0)
        throw IntegrityViolation("hash sidecar header mismatch");
    for (size_t i = 0; i < t.bucket_count(); ++i)
        if (std::memcmp(sidecar.data() + kMhtHeaderSize + i * 32, t.node_hash_[i].data(), 32) != 0)
            throw IntegrityViolation("hash sidecar does not match tree contents");
    if (trusted_root &&
        !ct_equal(ByteSpan(trusted_root->data(), 32), ByteSpan(t.root_.data(), 32)))
        throw IntegrityViolation("tree root does not match sealed state");
    return t;
}

}  // namespace t3::oram
