// t3-harness: chain generator, oracle replay checker, trace analyzer
// and ORAM benchmark driver.

#include "t3/chain/chainfile.hpp"
#include "t3/chain/tx.hpp"
#include "t3/harness/bench.hpp"
#include "t3/harness/genchain.hpp"
#include "t3/harness/oracle.hpp"
#include "t3/harness/trace.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

using namespace t3;

namespace {

std::vector<std::pair<uint32_t, double>> parse_dist(const std::string& s) {
    // "1:0.7,2:0.22,3:0.06,4:0.02"
    std::vector<std::pair<uint32_t, double>> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto colon = item.find(':');
        if (colon == std::string::npos) throw std::runtime_error("bad histogram entry: " + item);
        out.emplace_back(static_cast<uint32_t>(std::stoul(item.substr(0, colon))),
                         std::stod(item.substr(colon + 1)));
    }
    if (out.empty()) throw std::runtime_error("empty histogram");
    return out;
}

int cmd_gen(const harness::GenParams& params, const std::string& out_dir) {
    auto res = harness::gen_chain(params, out_dir);
    std::cout << "generated " << res.blocks << " blocks in " << out_dir << "\n"
              << "  transactions:   " << res.transactions << "\n"
              << "  outputs:        " << res.outputs_created << "\n"
              << "  spends:         " << res.spends << "\n"
              << "  addresses:      " << res.addresses << " (" << res.live_addresses
              << " still funded)\n"
              << "  live records:   " << res.live_records << "\n"
              << "  coverage@2:     " << res.coverage_at_2 << "\n";
    return 0;
}

int cmd_oracle(const std::string& chain_dir) {
    chain::DirBlockSource src(chain_dir);
    chain::HeaderChain hc;
    harness::OracleUtxo oracle;
    for (uint32_t h = 0;; ++h) {
        auto hex = src.get_block_hex(h);
        if (!hex) break;
        chain::Block blk = chain::parse_block(from_hex(*hex));
        if (hc.verify(blk.header) != chain::HeaderVerdict::Accept)
            throw std::runtime_error("block " + std::to_string(h) + ": header rejected");
        if (!chain::verify_block_body(blk))
            throw std::runtime_error("block " + std::to_string(h) + ": bad body");
        hc.append(blk.header);
        oracle.apply(chain::prune(blk, h));
    }
    if (hc.empty()) throw std::runtime_error("no blocks in " + chain_dir);

    auto truth = harness::load_ground_truth(std::filesystem::path(chain_dir) /
                                            "ground_truth.json");
    size_t mismatches = 0;
    size_t truth_live = 0;
    for (auto& [pkh, recs] : truth) {
        truth_live += recs.size();
        auto got = oracle.query(pkh);
        auto want = recs;
        auto key = [](const utxo::UtxoRecord& r) { return std::tie(r.txid, r.vout); };
        std::sort(want.begin(), want.end(),
                  [&](auto& a, auto& b) { return key(a) < key(b); });
        if (got != want) {
            if (++mismatches <= 5)
                std::cerr << "mismatch at " << to_hex(ByteSpan(pkh.data(), pkh.size())) << ": got "
                          << got.size() << " records, expected " << want.size() << "\n";
        }
    }
    // Addresses the oracle knows but the truth file does not.
    for (auto& [pkh, recs] : oracle.all()) {
        if (!recs.empty() && !truth.count(pkh)) {
            ++mismatches;
            if (mismatches <= 5)
                std::cerr << "extra live address " << to_hex(ByteSpan(pkh.data(), pkh.size()))
                          << "\n";
        }
    }
    std::cout << "replayed " << hc.size() << " blocks: " << oracle.total_records()
              << " live records, truth file lists " << truth_live << "\n";
    if (mismatches) {
        std::cout << "MISMATCH: " << mismatches << " addresses disagree\n";
        return 1;
    }
    std::cout << "ground truth matches exactly\n";
    return 0;
}

int cmd_trace(const std::string& in_file, uint32_t leaves) {
    auto log = harness::read_trace_csv(in_file);
    auto report = harness::analyze_uniformity(log, leaves);
    std::cout << harness::report_to_string(report);
    return report.linkage_detected ? 2 : 0;
}

int cmd_bench(const harness::BenchConfig& cfg, const std::string& csv) {
    auto rows = harness::run_bench(cfg, &std::cerr);
    std::cout << "strategy,n,mode,readers,median_us,ops_per_sec\n";
    for (auto& r : rows)
        std::cout << r.strategy << "," << r.n << "," << r.mode << "," << r.readers << ","
                  << r.median_us << "," << r.ops_per_sec << "\n";
    if (!csv.empty()) {
        harness::write_bench_csv(csv, rows);
        std::cerr << "wrote " << csv << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"t3-harness: test chain generator and measurement tools"};
    app.require_subcommand(1);

    harness::GenParams gp;
    std::string out_dir, dist;
    auto* gen = app.add_subcommand("gen", "generate a deterministic block directory");
    gen->add_option("--out", out_dir, "output directory")->required();
    gen->add_option("--seed", gp.seed, "generator seed");
    gen->add_option("--blocks", gp.blocks, "number of blocks");
    gen->add_option("--txs", gp.txs_per_block, "funded transactions per block");
    gen->add_option("--outputs-per-tx", gp.outputs_per_tx, "outputs per transaction");
    gen->add_option("--empty-rate", gp.empty_rate, "probability a tx sweeps an address to zero");
    gen->add_option("--dist", dist, "UTXO-count histogram, e.g. 1:0.7,2:0.22,3:0.06,4:0.02");
    gen->add_option("--nbits", gp.nbits, "compact difficulty target");

    std::string oracle_dir;
    auto* oracle = app.add_subcommand("oracle", "replay a block directory against ground truth");
    oracle->add_option("--chain", oracle_dir, "block directory with ground_truth.json")
        ->required();

    std::string trace_file;
    uint32_t leaves = 0;
    auto* trace = app.add_subcommand("trace", "chi-square uniformity test of an access log");
    trace->add_option("--in", trace_file, "trace CSV (interval,bid,leaf)")->required();
    trace->add_option("--leaves", leaves, "leaf space size (power of two)")->required();

    harness::BenchConfig bc;
    std::vector<std::string> strategies = {"path", "circuit"};
    std::string csv;
    auto* bench = app.add_subcommand("bench", "ORAM access benchmarks");
    bench->add_option("--n", bc.n_values, "tree capacities")->delimiter(',');
    bench->add_option("--strategy", strategies, "path and/or circuit")->delimiter(',');
    bench->add_option("--ops", bc.ops, "timed operations per mode");
    bench->add_option("--warmup", bc.warmup, "warmup writes");
    bench->add_option("--payload", bc.payload_bytes, "payload bytes per block");
    bench->add_option("--readers", bc.reader_counts, "reader thread counts")->delimiter(',');
    bench->add_option("--seed", bc.seed, "benchmark seed");
    bench->add_option("--csv", csv, "also write rows to this CSV file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            if (!dist.empty()) gp.histogram = parse_dist(dist);
            return cmd_gen(gp, out_dir);
        }
        if (oracle->parsed()) return cmd_oracle(oracle_dir);
        if (trace->parsed()) return cmd_trace(trace_file, leaves);
        bc.strategies.clear();
        for (auto& s : strategies) {
            if (s == "path")
                bc.strategies.push_back(oram::Strategy::PathOram);
            else if (s == "circuit")
                bc.strategies.push_back(oram::Strategy::CircuitOram);
            else
                throw std::runtime_error("unknown strategy " + s);
        }
        return cmd_bench(bc, csv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
