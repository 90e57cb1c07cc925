// Acceptance gate: runs every stated criterion end to end and prints one
// PASS/FAIL line per clause. Exits nonzero if any clause fails. Heavy
// configurations run sequentially to stay inside a 6 GB budget.

#include "t3/chain/chainfile.hpp"
#include "t3/chain/tx.hpp"
#include "t3/crypto.hpp"
#include "t3/harness/bench.hpp"
#include "t3/harness/genchain.hpp"
#include "t3/harness/oracle.hpp"
#include "t3/harness/trace.hpp"
#include "t3/oram/oram.hpp"
#include "t3/service/client.hpp"
#include "t3/service/config.hpp"
#include "t3/service/server.hpp"
#include "t3/service/wire.hpp"
#include "t3/store/two_tree.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

using namespace t3;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(const std::string& id, bool pass, const std::string& detail) {
    std::printf("%s criterion %s: %s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double secs_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path work_dir() {
    static fs::path d = [] {
        fs::path p = fs::temp_directory_path() / ("t3_accept_" + std::to_string(::getpid()));
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return d;
}

Bytes slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return Bytes(std::istreambuf_iterator<char>(in), {});
}

Hash160 rand_pkh(std::mt19937_64& rng) {
    Hash160 h;
    for (auto& b : h) b = static_cast<uint8_t>(rng());
    return h;
}

utxo::UtxoRecord rand_rec(std::mt19937_64& rng, const Hash160& pkh, uint32_t height) {
    utxo::UtxoRecord r;
    for (auto& b : r.txid) b = static_cast<uint8_t>(rng());
    r.vout = static_cast<uint32_t>(rng() % 4);
    r.amount = 1 + rng() % 1000000;
    r.height = height;
    r.pkh = pkh;
    return r;
}

std::vector<utxo::UtxoRecord> real_sorted(std::vector<utxo::UtxoRecord> v) {
    std::erase_if(v, [](const utxo::UtxoRecord& r) { return r.is_dummy(); });
    std::sort(v.begin(), v.end(), [](const utxo::UtxoRecord& a, const utxo::UtxoRecord& b) {
        return std::tie(a.txid, a.vout) < std::tie(b.txid, b.vout);
    });
    return v;
}

// ---- criterion 1: ORAM oracle equivalence --------------------------------

void criterion_1() {
    auto t0 = Clock::now();
    bool ok = true;
    std::string detail;
    for (auto strategy : {oram::Strategy::PathOram, oram::Strategy::CircuitOram}) {
        oram::OramParams p;
        p.capacity_n = 1u << 10;
        p.payload_bytes = 64;
        p.strategy = strategy;
        Key256 master{};
        master.fill(strategy == oram::Strategy::PathOram ? 0x11 : 0x22);
        oram::Oram o = oram::Oram::init(p, 7, master);
        harness::OracleKv oracle(p.payload_bytes);

        std::mt19937_64 rng(1001);
        size_t mismatches = 0;
        for (size_t i = 0; i < 10000; ++i) {
            uint32_t bid = static_cast<uint32_t>(rng() % p.capacity_n);
            if (rng() % 2) {
                Bytes payload(p.payload_bytes);
                for (auto& b : payload) b = static_cast<uint8_t>(rng());
                o.access(oram::OpKind::Write, bid, payload);
                oracle.write(bid, payload);
            } else {
                Bytes got = o.access(oram::OpKind::Read, bid);
                if (got != oracle.read(bid)) ++mismatches;
            }
        }
        if (mismatches) {
            ok = false;
            detail += (strategy == oram::Strategy::PathOram ? "path" : "circuit");
            detail += " mismatches=" + std::to_string(mismatches) + " ";
        }
    }
    double dt = secs_since(t0);
    ok = ok && dt < 60.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "oracle equivalence, 10^4 mixed ops at N=2^10 per strategy, %.1fs (limit 60s) %s",
                  dt, detail.c_str());
    report("1", ok, buf);
}

// ---- criterion 2: stash bound ---------------------------------------------

void criterion_2() {
    auto t0 = Clock::now();
    oram::OramParams p;
    p.capacity_n = 1u << 14;
    p.bucket_z = 4;
    p.payload_bytes = 64;
    p.strategy = oram::Strategy::PathOram;
    uint32_t bound = p.normalized().max_stash;  // 2 * log2(N) * Z

    Key256 master{};
    master.fill(0x33);
    oram::Oram o = oram::Oram::init(p, 8, master);

    std::mt19937_64 rng(2002);
    size_t overflows = 0;
    Bytes payload(p.payload_bytes, 0xAB);
    for (size_t i = 0; i < 100000; ++i) {
        uint32_t bid = static_cast<uint32_t>(rng() % p.capacity_n);
        try {
            if (rng() % 4) {
                o.access(oram::OpKind::Write, bid, payload);
            } else {
                o.access(oram::OpKind::Read, bid);
            }
        } catch (const oram::StashOverflow&) {
            ++overflows;
        }
    }
    double dt = secs_since(t0);
    uint32_t peak = o.stash(0).peak_occupancy();
    bool ok = overflows == 0 && peak <= bound && dt < 600.0;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "stash bound, Path Z=4 N=2^14 10^5 accesses: overflows=%zu peak=%u/%u, %.1fs "
                  "(limit 600s)",
                  overflows, peak, bound, dt);
    report("2", ok, buf);
}

// ---- criterion 3: leaf uniformity ------------------------------------------

void criterion_3() {
    store::StoreConfig cfg;
    cfg.n = 1u << 12;
    cfg.strategy = oram::Strategy::CircuitOram;
    cfg.max_out = 2;
    cfg.records_per_block = 16;
    cfg.seed = 30003;
    store::TwoTreeStore st;
    st.init(cfg);

    std::mt19937_64 rng(3003);
    std::vector<Hash160> addrs;
    addrs.reserve(10000);
    for (int i = 0; i < 10000; ++i) addrs.push_back(rand_pkh(rng));

    uint32_t height = 0;
    for (size_t off = 0; off < addrs.size(); off += 500) {
        chain::UpdateBatch b;
        b.height = height++;
        for (size_t i = off; i < off + 500; ++i) b.creates.push_back(rand_rec(rng, addrs[i], b.height));
        auto s = st.apply_batch_initial(b);
        if (s.creates_dropped) {
            report("3", false, "funding dropped creates; block capacity misconfigured");
            return;
        }
    }
    st.finish_init();

    std::vector<harness::TraceEntry> log;
    log.reserve(addrs.size());
    for (auto& a : addrs) {
        auto rr = st.serve_read(a);
        for (auto& [bid, leaf] : rr.touched) log.push_back({rr.interval, bid, leaf});
    }
    auto rep = harness::analyze_uniformity(log, cfg.n);

    // Planted control: the same log with every 10th entry pinned to one leaf.
    auto planted = log;
    for (size_t i = 0; i < planted.size(); i += 10) {
        planted[i].leaf = 7;
        planted[i].bid = static_cast<uint32_t>(1000000 + i);  // keep entries distinct
    }
    auto bad = harness::analyze_uniformity(planted, cfg.n);

    // 10^4 addresses over 2^12 blocks necessarily share some bids within
    // the interval; the analyzer collapses those before binning (and
    // reports them as the expected linkage window), so only the p-values
    // gate this criterion.
    bool ok = rep.p_value > 0.01 && bad.p_value < 1e-6;
    char buf[220];
    std::snprintf(buf, sizeof(buf),
                  "leaf uniformity over 10^4 serve_reads: p=%.4f (>0.01) on %zu deduped samples, "
                  "planted control p=%.2e (<1e-6)",
                  rep.p_value, rep.samples, bad.p_value);
    report("3", ok, buf);
}

// ---- criterion 4: snapshot immutability + sync equality --------------------

// Every tree file of an ORAM (all levels plus MHT sidecars), saved and
// read back as raw bytes.
std::vector<Bytes> oram_files(const oram::Oram& o, const fs::path& dir, const std::string& base) {
    fs::create_directories(dir);
    o.save(dir, base);
    std::vector<Bytes> out;
    for (size_t lvl = 0; lvl < o.level_count(); ++lvl) {
        fs::path f = oram::Oram::tree_file(dir, base, lvl);
        out.push_back(slurp(f));
        out.push_back(slurp(f.string() + ".mht"));
    }
    return out;
}

void criterion_4() {
    store::StoreConfig cfg;
    cfg.n = 1u << 10;
    cfg.strategy = oram::Strategy::CircuitOram;
    cfg.max_out = 2;
    cfg.records_per_block = 8;
    cfg.seed = 40004;
    store::TwoTreeStore st;
    st.init(cfg);

    std::mt19937_64 rng(4004);
    std::vector<Hash160> addrs;
    for (int i = 0; i < 200; ++i) addrs.push_back(rand_pkh(rng));
    chain::UpdateBatch b0;
    b0.height = 0;
    for (auto& a : addrs) b0.creates.push_back(rand_rec(rng, a, 0));
    st.apply_batch_initial(b0);
    st.finish_init();

    fs::path dir = work_dir() / "c4";
    auto before = oram_files(st.snapshot_oram(), dir, "before");

    // 10^3 reads spread over 4 threads inside one interval.
    std::vector<std::thread> threads;
    std::atomic<size_t> errors{0};
    for (unsigned t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            std::mt19937_64 r(5005 + t);
            for (int i = 0; i < 250; ++i) {
                try {
                    std::ignore = st.serve_read(addrs[r() % addrs.size()]);
                } catch (...) {
                    errors.fetch_add(1);
                }
            }
        });
    }
    for (auto& t : threads) t.join();

    auto after = oram_files(st.snapshot_oram(), dir, "after");
    bool immutable = before == after && errors.load() == 0;

    // Sync: drain + fresh snapshot. The snapshot must equal the original
    // byte for byte.
    chain::UpdateBatch b1;
    b1.height = 1;
    b1.creates.push_back(rand_rec(rng, addrs[0], 1));
    st.apply_block(b1);
    auto snap = oram_files(st.snapshot_oram(), dir, "snap");
    auto orig = oram_files(st.original_oram(), dir, "orig");
    bool sync_equal = snap == orig;

    // Cross-tree value agreement on 100 random bids.
    size_t disagreements = 0;
    for (int i = 0; i < 100; ++i) {
        uint32_t bid = static_cast<uint32_t>(rng() % cfg.n);
        if (st.snapshot_oram().read_once(bid) != st.original_oram().read_once(bid)) ++disagreements;
    }

    bool ok = immutable && sync_equal && disagreements == 0;
    char buf[220];
    std::snprintf(buf, sizeof(buf),
                  "snapshot files %s across 10^3 concurrent reads, post-sync snapshot %s original, "
                  "cross-tree disagreements=%zu/100",
                  immutable ? "byte-identical" : "CHANGED", sync_equal ? "==" : "!=", disagreements);
    report("4", ok, buf);
    fs::remove_all(dir);
}

// ---- criterion 5: throughput and latency shape -----------------------------

struct MedianPair {
    double standard_us = 0.0;
    double read_once_us = 0.0;
};

MedianPair medians_for(uint32_t n, oram::Strategy s, uint64_t seed) {
    oram::OramParams p;
    p.capacity_n = n;
    p.payload_bytes = 64;
    p.strategy = s;
    Key256 master{};
    master.fill(0x55);
    oram::Oram o = oram::Oram::init(p, seed, master);
    std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
    harness::bench_warmup(o, 100, rng);
    MedianPair m;
    m.standard_us = harness::median_standard_us(o, 1000, rng);
    m.read_once_us = harness::median_read_once_us(o, 1000, rng);
    return m;
}

void criterion_5() {
    // 5a: reader scaling at N=2^20. Throughput of 4 concurrent read-once
    // contexts vs 1 over the same frozen tree.
    double t1 = 0.0, t4 = 0.0;
    MedianPair path20;
    {
        oram::OramParams p;
        p.capacity_n = 1u << 20;
        p.payload_bytes = 64;
        p.strategy = oram::Strategy::PathOram;
        Key256 master{};
        master.fill(0x5A);
        oram::Oram o = oram::Oram::init(p, 50005, master);
        std::mt19937_64 rng(5005);
        harness::bench_warmup(o, 100, rng);
        path20.standard_us = harness::median_standard_us(o, 1000, rng);
        path20.read_once_us = harness::median_read_once_us(o, 1000, rng);
        t1 = harness::read_once_throughput(o, 1, 4000, 777);
        t4 = harness::read_once_throughput(o, 4, 1000, 778);
    }
    double scaling = t1 > 0 ? t4 / t1 : 0.0;
    {
        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "4-reader read_once throughput %.0f ops/s vs 1-reader %.0f ops/s at N=2^20: "
                      "%.2fx (needs >= 2x)",
                      t4, t1, scaling);
        report("5a", scaling >= 2.0, buf);
    }

    // 5b: read_once beats a standard access in median latency for every
    // config in {2^16, 2^20} x {Path, Circuit}.
    bool ok = true;
    std::string detail;
    auto add = [&](const char* name, const MedianPair& m) {
        bool pass = m.read_once_us < m.standard_us;
        ok = ok && pass;
        char buf[120];
        std::snprintf(buf, sizeof(buf), "%s ro=%.0fus std=%.0fus%s ", name, m.read_once_us,
                      m.standard_us, pass ? "" : " (!)");
        detail += buf;
    };
    add("path/2^20", path20);
    add("circuit/2^20", medians_for(1u << 20, oram::Strategy::CircuitOram, 50006));
    add("path/2^16", medians_for(1u << 16, oram::Strategy::PathOram, 50007));
    add("circuit/2^16", medians_for(1u << 16, oram::Strategy::CircuitOram, 50008));
    report("5b", ok, "read_once median < standard median: " + detail);
}

// ---- criterion 6: max-load bound -------------------------------------------

void criterion_6() {
    const size_t m = 1u << 16;
    const uint32_t n = 1u << 12;
    const uint32_t bound = utxo::capacity_for(m, n);  // ceil(e*m/n) = 44
    std::mt19937_64 rng(6006);

    int within = 0;
    uint32_t worst = 0;
    for (int seed = 0; seed < 100; ++seed) {
        Key256 kb;
        for (auto& b : kb) b = static_cast<uint8_t>(rng());
        std::vector<uint32_t> load(n, 0);
        for (size_t i = 0; i < m; ++i) {
            Hash160 pkh = rand_pkh(rng);
            load[utxo::oblock_map(pkh, kb, n)]++;
        }
        uint32_t mx = *std::max_element(load.begin(), load.end());
        worst = std::max(worst, mx);
        if (mx <= bound) ++within;
    }
    bool ok = within >= 99;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "balls-into-bins m=2^16 n=2^12: max load <= %u in %d/100 seeds (needs >= 99), "
                  "worst=%u",
                  bound, within, worst);
    report("6", ok, buf);
}

// ---- criterion 7 + 8(b-d) + 9 + 10: end-to-end chain ------------------------

struct RawConn {
    int fd = -1;

    bool connect_to(uint16_t port) {
        fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) return false;
        sockaddr_in sa{};
        sa.sin_family = AF_INET;
        sa.sin_port = htons(port);
        sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof(sa)) != 0) return false;
        timeval tv{30, 0};
        ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
        return true;
    }
    ~RawConn() {
        if (fd >= 0) ::close(fd);
    }

    bool send_env(uint8_t type, ByteSpan body) {
        Bytes wire = service::encode_envelope(type, body);
        size_t off = 0;
        while (off < wire.size()) {
            ssize_t k = ::send(fd, wire.data() + off, wire.size() - off, 0);
            if (k <= 0) return false;
            off += static_cast<size_t>(k);
        }
        return true;
    }
    std::optional<service::Envelope> recv_env() {
        Bytes buf;
        for (;;) {
            if (auto env = service::try_decode_envelope(buf)) return env;
            uint8_t chunk[4096];
            ssize_t k = ::recv(fd, chunk, sizeof(chunk), 0);
            if (k <= 0) return std::nullopt;
            buf.insert(buf.end(), chunk, chunk + k);
        }
    }
    std::optional<enclave::Session> attest(const Key256& root) {
        crypto::X25519KeyPair eph;
        enclave::ClientHello hello = enclave::make_client_hello(eph);
        if (!send_env(service::kAttestReq, hello.serialize())) return std::nullopt;
        auto env = recv_env();
        if (!env || env->type != service::kAttestResp) return std::nullopt;
        try {
            auto quote = enclave::AttestationQuote::parse(env->body);
            return enclave::attest_client(root, hello, eph, quote);
        } catch (...) {
            return std::nullopt;
        }
    }
    Bytes query_frame(enclave::Session& s, const Hash160& pkh, const Bytes& pubkey) {
        service::QueryBody q;
        q.proof.pkh = pkh;
        q.proof.pubkey = pubkey;
        return enclave::seal(s, service::encode_query(q));
    }
};

void criteria_chain() {
    auto t0 = Clock::now();
    fs::path dir = work_dir() / "chain200";

    harness::GenParams gp;
    gp.seed = 20260818;
    gp.blocks = 200;
    auto gr = harness::gen_chain(gp, dir);

    // Criterion 9 first: it only needs the generator's report.
    {
        auto truth = harness::load_ground_truth(dir / "ground_truth.json");
        double cov = harness::coverage_at(truth, 2);
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "default-distribution coverage at max_out=2: %.4f of %llu records (needs >= "
                      "0.92)",
                      cov, static_cast<unsigned long long>(gr.live_records));
        report("9", cov >= 0.92 && std::abs(cov - gr.coverage_at_2) < 1e-9, buf);
    }

    // Replay: 180 blocks as initial population, the last 20 through the
    // serving pipeline with its sync barrier.
    store::StoreConfig cfg;
    cfg.n = 1u << 16;
    cfg.strategy = oram::Strategy::CircuitOram;
    cfg.max_out = 4;
    cfg.records_per_block = 16;
    cfg.seed = 70007;

    auto st = std::make_unique<store::TwoTreeStore>();
    st->init(cfg);
    chain::HeaderChain hc;
    chain::DirBlockSource src(dir);

    uint64_t dropped = 0, unmatched = 0;
    bool replay_ok = true;
    for (uint32_t h = 0; h < gp.blocks; ++h) {
        auto hex = src.get_block_hex(h);
        if (!hex) {
            replay_ok = false;
            break;
        }
        chain::Block b = chain::parse_block(from_hex(*hex));
        if (hc.append(b.header) != chain::HeaderVerdict::Accept || !chain::verify_block_body(b)) {
            replay_ok = false;
            break;
        }
        auto batch = chain::prune(b, h);
        auto s = h < 180 ? st->apply_batch_initial(batch) : st->apply_block(batch);
        dropped += s.creates_dropped;
        unmatched += s.spends_unmatched;
        if (h == 179) st->finish_init();
    }

    // Every ground-truth address (spent-to-zero included) queried over the
    // sealed protocol through a live server.
    Key256 root{};
    root.fill(0x77);
    service::ServiceConfig scfg;
    scfg.store = cfg;
    scfg.listen = "127.0.0.1:0";
    scfg.readers = 2;
    service::Server srv(scfg, std::move(st), std::move(hc), root);
    srv.start();

    auto keys = service::load_keyfile(dir / "wallets.txt");
    std::map<Hash160, const service::KeyEntry*> by_pkh;
    for (auto& k : keys) by_pkh[k.pkh] = &k;

    auto truth = harness::load_ground_truth(dir / "ground_truth.json");
    size_t queried = 0, matched = 0, spent_to_zero = 0, missing_keys = 0;
    {
        service::Client cli;
        cli.connect("127.0.0.1", srv.port(), root);
        for (auto& [pkh, recs] : truth) {
            auto it = by_pkh.find(pkh);
            if (it == by_pkh.end()) {
                ++missing_keys;
                continue;
            }
            auto resp = cli.query(pkh, it->second->pubkey);
            ++queried;
            auto got = real_sorted(resp.records);
            auto want = real_sorted(recs);
            if (got == want) {
                ++matched;
                if (want.empty()) ++spent_to_zero;
            }
        }
        cli.close();
    }
    double dt = secs_since(t0);
    bool ok7 = replay_ok && dropped == 0 && unmatched == 0 && missing_keys == 0 &&
               queried == truth.size() && matched == queried && dt < 900.0;
    {
        char buf[240];
        std::snprintf(buf, sizeof(buf),
                      "200-block replay, %zu/%zu address queries exact (%zu spent-to-zero), "
                      "dropped=%llu unmatched=%llu, %.0fs (limit 900s)",
                      matched, queried, spent_to_zero,
                      static_cast<unsigned long long>(dropped),
                      static_cast<unsigned long long>(unmatched), dt);
        report("7", ok7, buf);
    }

    // 8c: byte-identical replay of a sealed query frame.
    {
        bool ok = false;
        std::string note = "no connection";
        RawConn c;
        if (c.connect_to(srv.port())) {
            auto sess = c.attest(root);
            if (sess) {
                auto& e = *truth.begin();
                auto it = by_pkh.find(e.first);
                Bytes frame = c.query_frame(*sess, e.first, it->second->pubkey);
                c.send_env(service::kQuery, frame);
                auto first = c.recv_env();
                if (first && first->type == service::kQueryResp) {
                    // Unseal in order; the channel counters are strict.
                    std::ignore = service::parse_query_resp(enclave::unseal(*sess, first->body));
                    c.send_env(service::kQuery, frame);
                    auto second = c.recv_env();
                    if (second && second->type == service::kError) {
                        auto code = service::parse_error(enclave::unseal(*sess, second->body));
                        ok = code == service::ErrCode::ReplayDetected;
                        note = std::string("second response = ") + service::errcode_name(code);
                    }
                }
            }
        }
        report("8c", ok, "replayed sealed frame rejected: " + note);
    }

    // 8d: wrong ownership proof -> BadProof, and error frames keep one size
    // regardless of the error behind them.
    {
        bool ok = false;
        std::string note = "no connection";
        RawConn c;
        if (c.connect_to(srv.port())) {
            auto sess = c.attest(root);
            if (sess) {
                auto& e = *truth.begin();
                Bytes foreign_pub = {0x02, 0x12, 0x34};  // hash160 != e.first
                c.send_env(service::kQuery, c.query_frame(*sess, e.first, foreign_pub));
                auto resp = c.recv_env();
                size_t badproof_len = 0;
                if (resp && resp->type == service::kError) {
                    badproof_len = resp->body.size();
                    auto code = service::parse_error(enclave::unseal(*sess, resp->body));
                    if (code == service::ErrCode::BadProof) {
                        // Compare against a replay error frame's size.
                        auto it = by_pkh.find(e.first);
                        Bytes frame = c.query_frame(*sess, e.first, it->second->pubkey);
                        c.send_env(service::kQuery, frame);
                        auto r1 = c.recv_env();
                        if (r1 && r1->type == service::kQueryResp)
                            std::ignore = enclave::unseal(*sess, r1->body);
                        c.send_env(service::kQuery, frame);
                        auto r2 = c.recv_env();
                        if (r1 && r2 && r2->type == service::kError) {
                            ok = r2->body.size() == badproof_len;
                            note = "BadProof frame " + std::to_string(badproof_len) +
                                   "B == other error frame " + std::to_string(r2->body.size()) + "B";
                        }
                    } else {
                        note = std::string("got ") + service::errcode_name(code);
                    }
                }
            }
        }
        report("8d", ok, "wrong ownership proof -> constant-size BadProof: " + note);
    }

    // Criterion 10: QUERY_RESP envelopes have one length for funded,
    // spent-to-zero, and unknown-but-proven addresses.
    {
        const service::KeyEntry* funded = nullptr;
        const service::KeyEntry* emptied = nullptr;
        for (auto& [pkh, recs] : truth) {
            auto it = by_pkh.find(pkh);
            if (it == by_pkh.end()) continue;
            if (!recs.empty() && !funded) funded = it->second;
            if (recs.empty() && !emptied) emptied = it->second;
            if (funded && emptied) break;
        }
        Bytes fresh_pub = {0x03, 0xAB, 0xCD, 0xEF};  // never appears in the chain

        bool ok = false;
        std::string note = "setup failed";
        RawConn c;
        if (funded && emptied && c.connect_to(srv.port())) {
            auto sess = c.attest(root);
            if (sess) {
                auto probe = [&](const Hash160& pkh, const Bytes& pub) -> size_t {
                    c.send_env(service::kQuery, c.query_frame(*sess, pkh, pub));
                    auto env = c.recv_env();
                    if (!env || env->type != service::kQueryResp) return 0;
                    // The sealed envelope length is the wire observable;
                    // unseal to keep counters aligned and the body honest.
                    std::ignore = service::parse_query_resp(enclave::unseal(*sess, env->body));
                    return env->body.size();
                };
                size_t l1 = probe(funded->pkh, funded->pubkey);
                size_t l2 = probe(emptied->pkh, emptied->pubkey);
                size_t l3 = probe(crypto::hash160(fresh_pub), fresh_pub);
                ok = l1 > 0 && l1 == l2 && l2 == l3;
                note = "funded=" + std::to_string(l1) + "B spent-to-zero=" + std::to_string(l2) +
                       "B unknown=" + std::to_string(l3) + "B";
            }
        }
        report("10", ok, "QUERY_RESP length constant across residency: " + note);
    }

    srv.stop();
}

// ---- criterion 8a: ciphertext tampering -------------------------------------

void criterion_8a() {
    fs::path dir = work_dir() / "c8a";
    fs::create_directories(dir);

    oram::OramParams p;
    p.capacity_n = 1u << 8;
    p.payload_bytes = 64;
    p.strategy = oram::Strategy::PathOram;
    Key256 master{};
    master.fill(0x88);
    oram::Oram o = oram::Oram::init(p, 88, master);
    Bytes payload(p.payload_bytes, 0xCD);
    o.access(oram::OpKind::Write, 5, payload);
    o.save(dir, "t");
    Bytes state = o.state_blob();

    bool caught_file = false;
    {
        fs::path tf = oram::Oram::tree_file(dir, "t", 0);
        Bytes raw = slurp(tf);
        raw[raw.size() / 2] ^= 0x01;  // flip one ciphertext byte
        std::ofstream out(tf, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(raw.data()), raw.size());
        out.close();
        try {
            auto o2 = oram::Oram::load(dir, "t", p, state, master);
            std::ignore = o2.access(oram::OpKind::Read, 5);
        } catch (const oram::IntegrityViolation&) {
            caught_file = true;
        }
    }

    // Wrong AEAD key: the hash tree is key-independent, so the violation
    // surfaces at the first slot the ORAM opens, before any response.
    bool caught_key = false;
    {
        fs::remove_all(dir);
        fs::create_directories(dir);
        o.save(dir, "t");
        Key256 wrong = master;
        wrong[0] ^= 1;
        try {
            auto o2 = oram::Oram::load(dir, "t", p, state, wrong);
            std::ignore = o2.access(oram::OpKind::Read, 5);
        } catch (const oram::IntegrityViolation&) {
            caught_key = true;
        }
    }

    bool ok = caught_file && caught_key;
    std::string detail = std::string("flipped ciphertext byte ") +
                         (caught_file ? "caught" : "MISSED") + ", wrong AEAD key " +
                         (caught_key ? "caught before response" : "MISSED");
    report("8a", ok, detail);
    fs::remove_all(dir);
}

// ---- criterion 8b: tampered header rejected, tree unchanged ------------------

void criterion_8b() {
    fs::path gen_dir = work_dir() / "c8b_gen";
    fs::path serve_dir = work_dir() / "c8b_serve";
    fs::create_directories(serve_dir);

    harness::GenParams gp;
    gp.seed = 8008;
    gp.blocks = 4;
    harness::gen_chain(gp, gen_dir);
    chain::DirBlockSource src(gen_dir);

    // Init from blocks 0-2; block 3 arrives over the poll loop.
    store::StoreConfig cfg;
    cfg.n = 1u << 8;
    cfg.strategy = oram::Strategy::CircuitOram;
    cfg.max_out = 2;
    cfg.records_per_block = 16;
    cfg.seed = 80008;
    auto st = std::make_unique<store::TwoTreeStore>();
    st->init(cfg);
    chain::HeaderChain hc;
    for (uint32_t h = 0; h < 3; ++h) {
        chain::Block b = chain::parse_block(from_hex(*src.get_block_hex(h)));
        hc.append(b.header);
        st->apply_batch_initial(chain::prune(b, h));
        fs::copy_file(chain::DirBlockSource::block_path(gen_dir, h),
                      chain::DirBlockSource::block_path(serve_dir, h));
    }
    st->finish_init();

    // Block 3 with a broken parent link.
    Bytes good3 = slurp(chain::DirBlockSource::block_path(gen_dir, 3));
    {
        Bytes bad = good3;
        bad[4] ^= 0x01;  // first byte of prev_hash
        std::ofstream out(chain::DirBlockSource::block_path(serve_dir, 3), std::ios::binary);
        out.write(reinterpret_cast<const char*>(bad.data()), bad.size());
    }

    Key256 root{};
    root.fill(0x99);
    service::ServiceConfig scfg;
    scfg.store = cfg;
    scfg.listen = "127.0.0.1:0";
    scfg.readers = 1;
    scfg.chain_dir = serve_dir.string();
    scfg.poll_ms = 50;
    service::Server srv(scfg, std::move(st), std::move(hc), root);

    fs::path snap_dir = work_dir() / "c8b_snap";
    auto before = oram_files(srv.store().snapshot_oram(), snap_dir, "pre");
    uint64_t interval_before = srv.store().interval();

    srv.start();
    bool saw_reject = false;
    for (int i = 0; i < 100 && !saw_reject; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        saw_reject = srv.stats().blocks_rejected >= 1;
    }
    bool unchanged = srv.store().interval() == interval_before &&
                     oram_files(srv.store().snapshot_oram(), snap_dir, "post") == before &&
                     srv.stats().blocks_ingested == 0;

    // The authentic block is accepted afterwards: rejection quarantines
    // the input, not the pipeline.
    {
        std::ofstream out(chain::DirBlockSource::block_path(serve_dir, 3), std::ios::binary);
        out.write(reinterpret_cast<const char*>(good3.data()), good3.size());
    }
    bool recovered = false;
    for (int i = 0; i < 100 && !recovered; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        recovered = srv.stats().blocks_ingested >= 1;
    }
    recovered = recovered && srv.store().interval() == interval_before + 1;
    srv.stop();

    bool ok = saw_reject && unchanged && recovered;
    std::string detail = std::string("bad-link block ") + (saw_reject ? "rejected" : "NOT rejected") +
                         ", tree " + (unchanged ? "unchanged" : "CHANGED") + ", authentic block " +
                         (recovered ? "ingested after" : "NOT ingested");
    report("8b", ok, detail);
    fs::remove_all(gen_dir);
    fs::remove_all(serve_dir);
    fs::remove_all(snap_dir);
}

}  // namespace

int main() {
    std::setvbuf(stdout, nullptr, _IOLBF, 0);
    auto t0 = Clock::now();

    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criteria_chain();  // 9, 7, 8c, 8d, 10 (shared 200-block fixture)
    criterion_8a();
    criterion_8b();

    std::printf("acceptance finished in %.0fs, %d failing clause%s\n", secs_since(t0), g_failures,
                g_failures == 1 ? "" : "s");
    fs::remove_all(work_dir());
    return g_failures ? 1 : 0;
}
