#pragma once

#include "t3/bytes.hpp"
#include "t3/utxo/record.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace t3::harness {

struct GenParams {
    uint64_t seed = 1;
    uint32_t blocks = 20;
    // Funded transactions per block; block h spends the faucet outputs
    // minted by block h-1's coinbase, so every spend crosses a block
    // boundary and batches never contain intra-block chains.
    uint32_t txs_per_block = 8;
    uint32_t outputs_per_tx = 2;
    // Probability that a transaction also sweeps one fully funded
    // address to zero.
    double empty_rate = 0.25;
    // Per-address UTXO-count histogram: (count, probability).
    std::vector<std::pair<uint32_t, double>> histogram = {
        {1, 0.70}, {2, 0.22}, {3, 0.06}, {4, 0.02}};
    uint32_t nbits = 0x207fffff;
    uint32_t genesis_time = 1700000000;
};

struct GenResult {
    uint32_t blocks = 0;
    uint64_t transactions = 0;
    uint64_t outputs_created = 0;
    uint64_t spends = 0;
    uint64_t addresses = 0;
    uint64_t live_records = 0;
    uint64_t live_addresses = 0;
    // Fraction of live records servable when responses carry at most
    // max_out records per address.
    double coverage_at_2 = 0.0;
};

using GroundTruth = std::map<Hash160, std::vector<utxo::UtxoRecord>>;

// Writes block_NNNNNN.bin files, wallets.txt (hex pubkey,privkey per
// line), ground_truth.json and manifest.json into dir. Deterministic:
// one seed, one byte-identical directory.
GenResult gen_chain(const GenParams& params, const std::filesystem::path& dir);

GroundTruth load_ground_truth(const std::filesystem::path& file);

double coverage_at(const GroundTruth& truth, uint32_t max_out);

}  // namespace t3::harness
