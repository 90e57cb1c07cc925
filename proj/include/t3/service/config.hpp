#pragma once

#include "t3/store/two_tree.hpp"

#include <filesystem>
#include <string>

namespace t3::service {

struct ServiceConfig {
    store::StoreConfig store;
    std::string listen = "127.0.0.1:7733";
    unsigned readers = 4;
    std::filesystem::path state_dir;
    std::filesystem::path chain_dir;  // block stub polled by the ingest loop
    unsigned poll_ms = 1000;
    bool require_signature = false;  // ownership proofs must carry a signature
    bool persist_each_sync = false;
};

// service.json inside the state directory records everything needed to
// serve; command-line flags override individual fields.
void save_service_config(const ServiceConfig& cfg, const std::filesystem::path& state_dir);
ServiceConfig load_service_config(const std::filesystem::path& state_dir);

// Attestation root from T3_ATTEST_ROOT (64 hex chars). Without it a
// fixed all-zero key is used, which authenticates nothing; the caller
// gets a warning flag back.
Key256 attest_root_from_env(bool* defaulted = nullptr);

// state.key: the store master key sealed under a key derived from the
// attestation root, simulating hardware-bound sealing.
void seal_master_key(const std::filesystem::path& state_dir, const Key256& master,
                     const Key256& attest_root);
Key256 unseal_master_key(const std::filesystem::path& state_dir, const Key256& attest_root);

Key256 chain_integrity_key(const Key256& master);

}  // namespace t3::service
