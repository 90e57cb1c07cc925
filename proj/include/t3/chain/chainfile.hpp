#pragma once

#include "t3/chain/header.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace t3::chain {

struct ChainIntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class HeaderVerdict { Accept, BadLink, BadPow, BadEncoding };

const char* verdict_name(HeaderVerdict v);

// Append-only header chain. The first accepted header is the genesis;
// every later one must link to the current tip and satisfy its own
// nbits target. Reorgs are rejected outright: a header that links to
// anything but the tip is BadLink.
class HeaderChain {
public:
    HeaderVerdict verify(const BlockHeader& h) const;
    HeaderVerdict verify_raw(ByteSpan raw, BlockHeader* parsed = nullptr) const;
    HeaderVerdict append(const BlockHeader& h);

    size_t size() const { return headers_.size(); }
    bool empty() const { return headers_.empty(); }
    // Height of the tip; genesis is height 0.
    uint32_t tip_height() const { return static_cast<uint32_t>(headers_.size()) - 1; }
    const BlockHeader& operator[](size_t i) const { return headers_[i]; }
    const BlockHeader& tip() const { return headers_.back(); }
    Hash256 tip_hash() const { return headers_.back().hash(); }

    // File image: magic, count, raw headers, HMAC over all of it.
    // parse/load throw ChainIntegrityError when the tag or linkage
    // does not hold.
    Bytes serialize(const Key256& integrity_key) const;
    static HeaderChain parse(ByteSpan raw, const Key256& integrity_key);
    void save(const std::filesystem::path& file, const Key256& integrity_key) const;
    static HeaderChain load(const std::filesystem::path& file, const Key256& integrity_key);

private:
    std::vector<BlockHeader> headers_;
};

// Daemon-shaped block fetch: get block by height as raw hex, nullopt
// when that height does not exist yet.
class BlockSource {
public:
    virtual ~BlockSource() = default;
    virtual std::optional<std::string> get_block_hex(uint32_t height) = 0;
};

// File-backed stub: serves block_NNNNNN.bin files from a directory.
class DirBlockSource : public BlockSource {
public:
    explicit DirBlockSource(std::filesystem::path dir) : dir_(std::move(dir)) {}
    std::optional<std::string> get_block_hex(uint32_t height) override;

    static std::filesystem::path block_path(const std::filesystem::path& dir, uint32_t height);

private:
    std::filesystem::path dir_;
};

}  // namespace t3::chain
