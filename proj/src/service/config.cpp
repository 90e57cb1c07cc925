#include "t3/service/config.hpp"

#include "t3/crypto.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <cstring>
#include <fstream>

namespace t3::service {

namespace {

constexpr char kKeyAad[] = "t3-state-key";

Key256 derive_from(const Key256& base, const char* label) {
    Hash256 h = crypto::hmac_sha256(
        ByteSpan(base.data(), base.size()),
        ByteSpan(reinterpret_cast<const uint8_t*>(label), std::strlen(label)));
    Key256 k;
    std::memcpy(k.data(), h.data(), 32);
    return k;
}

}  // namespace

void save_service_config(const ServiceConfig& cfg, const std::filesystem::path& state_dir) {
    nlohmann::json j = {
        {"listen", cfg.listen},
        {"readers", cfg.readers},
        {"chain_dir", cfg.chain_dir.string()},
        {"poll_ms", cfg.poll_ms},
        {"require_signature", cfg.require_signature},
        {"persist_each_sync", cfg.persist_each_sync},
        {"store",
         {{"n", cfg.store.n},
          {"z", cfg.store.z},
          {"strategy", cfg.store.strategy == oram::Strategy::CircuitOram ? "circuit" : "path"},
          {"max_out", cfg.store.max_out},
          {"delta", cfg.store.delta},
          {"delta_max", cfg.store.delta_max},
          {"client_delta", cfg.store.client_delta},
          {"reject_duplicates", cfg.store.reject_duplicates},
          {"records_per_block", cfg.store.records_per_block},
          {"parked_limit", cfg.store.parked_limit}}},
    };
    std::ofstream f(state_dir / "service.json", std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write service.json");
    f << j.dump(1) << "\n";
}

ServiceConfig load_service_config(const std::filesystem::path& state_dir) {
    std::ifstream f(state_dir / "service.json");
    if (!f) throw std::runtime_error("no service.json in " + state_dir.string());
    nlohmann::json j;
    f >> j;
    ServiceConfig cfg;
    cfg.state_dir = state_dir;
    cfg.listen = j.value("listen", cfg.listen);
    cfg.readers = j.value("readers", cfg.readers);
    cfg.chain_dir = j.value("chain_dir", std::string());
    cfg.poll_ms = j.value("poll_ms", cfg.poll_ms);
    cfg.require_signature = j.value("require_signature", cfg.require_signature);
    cfg.persist_each_sync = j.value("persist_each_sync", cfg.persist_each_sync);
    if (j.contains("store")) {
        const auto& s = j["store"];
        cfg.store.n = s.value("n", cfg.store.n);
        cfg.store.z = s.value("z", cfg.store.z);
        std::string strat = s.value("strategy", std::string("circuit"));
        cfg.store.strategy =
            strat == "path" ? oram::Strategy::PathOram : oram::Strategy::CircuitOram;
        cfg.store.max_out = s.value("max_out", cfg.store.max_out);
        cfg.store.delta = s.value("delta", cfg.store.delta);
        cfg.store.delta_max = s.value("delta_max", cfg.store.delta_max);
        cfg.store.client_delta = s.value("client_delta", cfg.store.client_delta);
        cfg.store.reject_duplicates = s.value("reject_duplicates", cfg.store.reject_duplicates);
        cfg.store.records_per_block = s.value("records_per_block", cfg.store.records_per_block);
        cfg.store.parked_limit = s.value("parked_limit", cfg.store.parked_limit);
    }
    return cfg;
}

Key256 attest_root_from_env(bool* defaulted) {
    Key256 root{};
    if (defaulted) *defaulted = true;
    const char* env = std::getenv("T3_ATTEST_ROOT");
    if (env && *env) {
        Bytes raw = from_hex(env);
        if (raw.size() != 32) throw std::runtime_error("T3_ATTEST_ROOT must be 64 hex chars");
        std::memcpy(root.data(), raw.data(), 32);
        if (defaulted) *defaulted = false;
    }
    return root;
}

void seal_master_key(const std::filesystem::path& state_dir, const Key256& master,
                     const Key256& attest_root) {
    Key256 kek = derive_from(attest_root, "state-seal");
    std::array<uint8_t, crypto::kAeadNonceSize> nonce{};
    crypto::random_bytes(nonce.data(), nonce.size());
    Bytes sealed = crypto::aead_seal(kek, nonce, ByteSpan(master.data(), master.size()),
                                     ByteSpan(reinterpret_cast<const uint8_t*>(kKeyAad),
                                              std::strlen(kKeyAad)));
    std::ofstream f(state_dir / "state.key", std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write state.key");
    f.write(reinterpret_cast<const char*>(nonce.data()),
            static_cast<std::streamsize>(nonce.size()));
    f.write(reinterpret_cast<const char*>(sealed.data()),
            static_cast<std::streamsize>(sealed.size()));
}

Key256 unseal_master_key(const std::filesystem::path& state_dir, const Key256& attest_root) {
    std::ifstream f(state_dir / "state.key", std::ios::binary);
    if (!f) throw std::runtime_error("no state.key in " + state_dir.string());
    Bytes raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (raw.size() != crypto::kAeadNonceSize + 32 + crypto::kAeadTagSize)
        throw std::runtime_error("state.key has unexpected size");
    Key256 kek = derive_from(attest_root, "state-seal");
    std::array<uint8_t, crypto::kAeadNonceSize> nonce{};
    std::memcpy(nonce.data(), raw.data(), nonce.size());
    auto master = crypto::aead_open(kek, nonce,
                                    ByteSpan(raw.data() + crypto::kAeadNonceSize,
                                             raw.size() - crypto::kAeadNonceSize),
                                    ByteSpan(reinterpret_cast<const uint8_t*>(kKeyAad),
                                             std::strlen(kKeyAad)));
    if (!master) throw std::runtime_error("state.key cannot be unsealed with this root");
    Key256 out;
    std::memcpy(out.data(), master->data(), 32);
    return out;
}

Key256 chain_integrity_key(const Key256& master) { return derive_from(master, "chain-integrity"); }

}  // namespace t3::service
