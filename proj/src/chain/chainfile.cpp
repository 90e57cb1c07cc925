#include "t3/chain/chainfile.hpp"

#include "t3/crypto.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace t3::chain {

namespace {
constexpr char kMagic[8] = {'T', '3', 'H', 'D', 'R', 'S', 'V', '1'};
}

const char* verdict_name(HeaderVerdict v) {
    switch (v) {
        case HeaderVerdict::Accept: return "accept";
        case HeaderVerdict::BadLink: return "bad-link";
        case HeaderVerdict::BadPow: return "bad-pow";
        case HeaderVerdict::BadEncoding: return "bad-encoding";
    }
    return "?";
}

HeaderVerdict HeaderChain::verify(const BlockHeader& h) const {
    if (!decode_nbits(h.nbits)) return HeaderVerdict::BadEncoding;
    if (!headers_.empty() && h.prev_hash != tip_hash()) return HeaderVerdict::BadLink;
    if (!check_pow(h)) return HeaderVerdict::BadPow;
    return HeaderVerdict::Accept;
}

HeaderVerdict HeaderChain::verify_raw(ByteSpan raw, BlockHeader* parsed) const {
    if (raw.size() != kHeaderSize) return HeaderVerdict::BadEncoding;
    BlockHeader h = BlockHeader::parse(raw);
    if (parsed) *parsed = h;
    return verify(h);
}

HeaderVerdict HeaderChain::append(const BlockHeader& h) {
    HeaderVerdict v = verify(h);
    if (v == HeaderVerdict::Accept) headers_.push_back(h);
    return v;
}

Bytes HeaderChain::serialize(const Key256& integrity_key) const {
    Bytes out;
    out.reserve(8 + 4 + headers_.size() * kHeaderSize + 32);
    out.insert(out.end(), kMagic, kMagic + 8);
    out.resize(out.size() + 4);
    put_u32be(out.data() + out.size() - 4, static_cast<uint32_t>(headers_.size()));
    for (const auto& h : headers_) {
        auto ser = h.serialize();
        out.insert(out.end(), ser.begin(), ser.end());
    }
    Hash256 tag = crypto::hmac_sha256(ByteSpan(integrity_key.data(), integrity_key.size()), out);
    out.insert(out.end(), tag.begin(), tag.end());
    return out;
}

HeaderChain HeaderChain::parse(ByteSpan raw, const Key256& integrity_key) {
    if (raw.size() < 8 + 4 + 32 || std::memcmp(raw.data(), kMagic, 8) != 0)
        throw ChainIntegrityError("not a header chain file");
    Hash256 tag = crypto::hmac_sha256(ByteSpan(integrity_key.data(), integrity_key.size()),
                                      ByteSpan(raw.data(), raw.size() - 32));
    if (!ct_equal(ByteSpan(tag.data(), 32), ByteSpan(raw.data() + raw.size() - 32, 32)))
        throw ChainIntegrityError("header chain integrity tag mismatch");
    uint32_t count = get_u32be(raw.data() + 8);
    if (raw.size() != 8 + 4 + static_cast<size_t>(count) * kHeaderSize + 32)
        throw ChainIntegrityError("header chain length mismatch");
    HeaderChain chain;
    for (uint32_t i = 0; i < count; ++i) {
        BlockHeader h = BlockHeader::parse(
            ByteSpan(raw.data() + 12 + static_cast<size_t>(i) * kHeaderSize, kHeaderSize));
        if (chain.append(h) != HeaderVerdict::Accept)
            throw ChainIntegrityError("persisted chain fails verification");
    }
    return chain;
}

void HeaderChain::save(const std::filesystem::path& file, const Key256& integrity_key) const {
    Bytes img = serialize(integrity_key);
    std::ofstream f(file, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + file.string() + " for writing");
    f.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
    if (!f) throw std::runtime_error("short write to " + file.string());
}

HeaderChain HeaderChain::load(const std::filesystem::path& file, const Key256& integrity_key) {
    std::ifstream f(file, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + file.string());
    Bytes raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse(raw, integrity_key);
}

std::filesystem::path DirBlockSource::block_path(const std::filesystem::path& dir, uint32_t height) {
    char name[32];
    std::snprintf(name, sizeof(name), "block_%06u.bin", height);
    return dir / name;
}

std::optional<std::string> DirBlockSource::get_block_hex(uint32_t height) {
    auto path = block_path(dir_, height);
    std::ifstream f(path, std::ios::binary);
    if (!f) return std::nullopt;
    Bytes raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return to_hex(raw);
}

}  // namespace t3::chain
