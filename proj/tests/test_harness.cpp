#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "t3/chain/chainfile.hpp"
#include "t3/chain/merkle.hpp"
#include "t3/chain/tx.hpp"
#include "t3/crypto.hpp"
#include "t3/harness/bench.hpp"
#include "t3/harness/genchain.hpp"
#include "t3/harness/oracle.hpp"
#include "t3/harness/trace.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace t3;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
    fs::path d = fs::temp_directory_path() / (std::string("t3_harn_") + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

Bytes slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return Bytes(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("chain generation is deterministic per seed") {
    harness::GenParams gp;
    gp.seed = 123;
    gp.blocks = 5;
    gp.txs_per_block = 3;

    auto d1 = temp_dir("gen1");
    auto d2 = temp_dir("gen2");
    auto r1 = harness::gen_chain(gp, d1);
    auto r2 = harness::gen_chain(gp, d2);

    CHECK(r1.blocks == 5);
    CHECK(r1.transactions == r2.transactions);
    CHECK(r1.live_records == r2.live_records);

    for (uint32_t h = 0; h < 5; ++h) {
        auto f = chain::DirBlockSource::block_path(d1, h).filename();
        CHECK(slurp(d1 / f) == slurp(d2 / f));
    }
    CHECK(slurp(d1 / "ground_truth.json") == slurp(d2 / "ground_truth.json"));

    // A different seed diverges immediately.
    gp.seed = 124;
    auto d3 = temp_dir("gen3");
    harness::gen_chain(gp, d3);
    CHECK(slurp(d1 / "block_000000.bin") != slurp(d3 / "block_000000.bin"));

    fs::remove_all(d1);
    fs::remove_all(d2);
    fs::remove_all(d3);
}

TEST_CASE("generated chains verify and replay to their ground truth") {
    harness::GenParams gp;
    gp.seed = 321;
    gp.blocks = 8;
    gp.txs_per_block = 5;
    gp.empty_rate = 0.4;
    auto dir = temp_dir("replay");
    auto gr = harness::gen_chain(gp, dir);
    CHECK(gr.spends > 0);
    CHECK(gr.live_records > 0);

    chain::DirBlockSource src(dir);
    chain::HeaderChain hc;
    harness::OracleUtxo oracle;
    for (uint32_t h = 0; h < gp.blocks; ++h) {
        auto hex = src.get_block_hex(h);
        REQUIRE(hex.has_value());
        chain::Block b = chain::parse_block(from_hex(*hex));
        REQUIRE(hc.append(b.header) == chain::HeaderVerdict::Accept);
        REQUIRE(chain::verify_block_body(b));
        oracle.apply(chain::prune(b, h));
    }
    CHECK(hc.tip_height() == gp.blocks - 1);

    // The truth file lists spent-to-zero addresses with empty record
    // sets; the oracle's query order is (txid, vout).
    auto truth = harness::load_ground_truth(dir / "ground_truth.json");
    auto by_outpoint = [](const utxo::UtxoRecord& x, const utxo::UtxoRecord& y) {
        return std::tie(x.txid, x.vout) < std::tie(y.txid, y.vout);
    };
    size_t truth_records = 0, truth_live_addrs = 0;
    for (auto& [pkh, recs] : truth) {
        auto want = recs;
        std::sort(want.begin(), want.end(), by_outpoint);
        auto got = oracle.query(pkh);
        REQUIRE(got.size() == want.size());
        for (size_t i = 0; i < want.size(); ++i) CHECK(got[i] == want[i]);
        truth_records += recs.size();
        if (!recs.empty()) ++truth_live_addrs;
    }
    CHECK(truth_records == oracle.total_records());
    CHECK(truth_records == gr.live_records);

    // No live address is missing from the truth file.
    size_t live_addrs = 0;
    for (auto& [pkh, recs] : oracle.all())
        if (!recs.empty()) ++live_addrs;
    CHECK(live_addrs == truth_live_addrs);
    CHECK(live_addrs == gr.live_addresses);

    fs::remove_all(dir);
}

TEST_CASE("reference hmac matches RFC 4231 and the production wrapper") {
    // RFC 4231 test case 2.
    Bytes key = {'J', 'e', 'f', 'e'};
    Bytes msg = {'w', 'h', 'a', 't', ' ', 'd', 'o', ' ', 'y', 'a', ' ', 'w', 'a', 'n',
                 't', ' ', 'f', 'o', 'r', ' ', 'n', 'o', 't', 'h', 'i', 'n', 'g', '?'};
    Hash256 ref = harness::ref_hmac_sha256(key, msg);
    Bytes refb(ref.begin(), ref.end());
    CHECK(to_hex(refb) == "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843");
    CHECK(ref == crypto::hmac_sha256(key, msg));

    // Long key (forces the pre-hash branch) against the wrapper.
    Bytes lkey(131, 0xAA);
    Bytes lmsg = {'t', 'e', 's', 't'};
    CHECK(harness::ref_hmac_sha256(lkey, lmsg) == crypto::hmac_sha256(lkey, lmsg));
}

TEST_CASE("coverage metric") {
    harness::GroundTruth truth;
    Hash160 a{}, b{}, c{};
    a.fill(1);
    b.fill(2);
    c.fill(3);
    utxo::UtxoRecord r;
    r.amount = 1;
    truth[a] = {r};           // 1 record
    truth[b] = {r, r};        // 2 records
    truth[c] = {r, r, r, r};  // 4 records

    // max_out=2 serves 1 + 2 + 2 of the 7 records.
    CHECK(harness::coverage_at(truth, 2) == doctest::Approx(5.0 / 7.0));
    CHECK(harness::coverage_at(truth, 4) == doctest::Approx(1.0));
    CHECK(harness::coverage_at(truth, 1) == doctest::Approx(3.0 / 7.0));
}

TEST_CASE("uniformity analyzer") {
    const uint32_t leaves = 256;
    std::mt19937_64 rng(9);

    SUBCASE("uniform draws pass") {
        std::vector<harness::TraceEntry> log;
        for (uint32_t i = 0; i < 20000; ++i)
            log.push_back({i, i, static_cast<uint32_t>(rng() % leaves)});
        auto rep = harness::analyze_uniformity(log, leaves);
        CHECK(rep.samples == 20000);
        CHECK(rep.p_value > 0.01);
        CHECK_FALSE(rep.linkage_detected);
        CHECK(rep.bins > 1);
    }

    SUBCASE("a planted bias fails decisively") {
        std::vector<harness::TraceEntry> log;
        for (uint32_t i = 0; i < 20000; ++i) {
            uint32_t leaf = (i % 4 == 0) ? 7 : static_cast<uint32_t>(rng() % leaves);
            log.push_back({i, i, leaf});
        }
        auto rep = harness::analyze_uniformity(log, leaves);
        CHECK(rep.p_value < 1e-6);
    }

    SUBCASE("same-interval duplicates collapse and flag linkage") {
        std::vector<harness::TraceEntry> log;
        for (uint32_t i = 0; i < 5000; ++i) {
            uint32_t leaf = static_cast<uint32_t>(rng() % leaves);
            log.push_back({1, i, leaf});
            log.push_back({1, i, leaf});  // the repeat reveals the same leaf
        }
        auto rep = harness::analyze_uniformity(log, leaves);
        CHECK(rep.raw_entries == 10000);
        CHECK(rep.samples == 5000);  // dedup keeps the statistic honest
        CHECK(rep.duplicate_groups == 5000);
        CHECK(rep.linked_groups == 5000);
        CHECK(rep.linkage_detected);
        CHECK(rep.p_value > 0.01);

        // Cross-interval repeats are expected to land elsewhere.
        std::vector<harness::TraceEntry> fresh;
        for (uint32_t i = 0; i < 5000; ++i) {
            fresh.push_back({1, i, static_cast<uint32_t>(rng() % leaves)});
            fresh.push_back({2, i, static_cast<uint32_t>(rng() % leaves)});
        }
        auto rep2 = harness::analyze_uniformity(fresh, leaves);
        CHECK(rep2.samples == 10000);
        CHECK_FALSE(rep2.linkage_detected);
    }

    SUBCASE("report renders") {
        std::vector<harness::TraceEntry> log;
        for (uint32_t i = 0; i < 1000; ++i)
            log.push_back({i, i, static_cast<uint32_t>(rng() % leaves)});
        auto rep = harness::analyze_uniformity(log, leaves);
        std::string s = harness::report_to_string(rep);
        CHECK(s.find("p=") != std::string::npos);
    }
}

TEST_CASE("trace csv round trip") {
    auto dir = temp_dir("csv");
    std::vector<harness::TraceEntry> log = {
        {0, 5, 17}, {1, 6, 200}, {0xFFFFFFFFFFFFULL, 0xFFFFFFFF, 0},
    };
    fs::path file = dir / "trace.csv";
    harness::write_trace_csv(file, log);
    auto back = harness::read_trace_csv(file);
    REQUIRE(back.size() == log.size());
    for (size_t i = 0; i < log.size(); ++i) {
        CHECK(back[i].interval == log[i].interval);
        CHECK(back[i].bid == log[i].bid);
        CHECK(back[i].leaf == log[i].leaf);
    }
    fs::remove_all(dir);
}

TEST_CASE("bench produces sane rows") {
    harness::BenchConfig cfg;
    cfg.n_values = {1u << 8};
    cfg.strategies = {oram::Strategy::CircuitOram};
    cfg.ops = 40;
    cfg.warmup = 32;
    cfg.reader_counts = {1, 2};
    cfg.seed = 5;

    std::ostringstream progress;
    auto rows = harness::run_bench(cfg, &progress);

    // standard + read_once + one read_once_mt row per reader count.
    REQUIRE(rows.size() == 4);
    bool saw_standard = false, saw_read_once = false;
    unsigned mt_rows = 0;
    for (auto& r : rows) {
        CHECK(r.n == (1u << 8));
        CHECK(r.strategy == "circuit");
        CHECK(r.ops_per_sec > 0.0);
        if (r.mode == "standard") {
            saw_standard = true;
            CHECK(r.median_us > 0.0);
        } else if (r.mode == "read_once") {
            saw_read_once = true;
            CHECK(r.median_us > 0.0);
        } else if (r.mode == "read_once_mt") {
            ++mt_rows;
        }
    }
    CHECK(saw_standard);
    CHECK(saw_read_once);
    CHECK(mt_rows == 2);

    auto dir = temp_dir("bench");
    fs::path csv = dir / "bench.csv";
    harness::write_bench_csv(csv, rows);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header.find("strategy") != std::string::npos);
    size_t lines = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ++lines;
    CHECK(lines == rows.size());
    fs::remove_all(dir);
}

TEST_CASE("manifest records the coverage the generator computed") {
    harness::GenParams gp;
    gp.seed = 55;
    gp.blocks = 6;
    auto dir = temp_dir("manifest");
    auto gr = harness::gen_chain(gp, dir);

    auto truth = harness::load_ground_truth(dir / "ground_truth.json");
    CHECK(harness::coverage_at(truth, 2) == doctest::Approx(gr.coverage_at_2));

    // manifest.json exists and mentions the seed.
    Bytes manifest = slurp(dir / "manifest.json");
    std::string m(manifest.begin(), manifest.end());
    CHECK(m.find("\"seed\"") != std::string::npos);
    CHECK(m.find("coverage_at_2") != std::string::npos);
    fs::remove_all(dir);
}
