#include "t3/harness/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <ostream>
#include <thread>

namespace t3::harness {

namespace {

using Clock = std::chrono::steady_clock;

double median(std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    if (n == 0) return 0.0;
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const char* strategy_name(oram::Strategy s) {
    return s == oram::Strategy::PathOram ? "path" : "circuit";
}

}  // namespace

void bench_warmup(oram::Oram& o, size_t warmup, std::mt19937_64& rng) {
    const uint32_t n = o.params().capacity_n;
    Bytes payload(o.params().payload_bytes);
    for (size_t i = 0; i < warmup; ++i) {
        for (auto& b : payload) b = static_cast<uint8_t>(rng());
        o.access(oram::OpKind::Write, static_cast<uint32_t>(rng() % n), payload);
    }
}

double median_standard_us(oram::Oram& o, size_t ops, std::mt19937_64& rng) {
    const uint32_t n = o.params().capacity_n;
    std::vector<double> us;
    us.reserve(ops);
    for (size_t i = 0; i < ops; ++i) {
        uint32_t bid = static_cast<uint32_t>(rng() % n);
        auto t0 = Clock::now();
        o.access(oram::OpKind::Read, bid);
        auto t1 = Clock::now();
        us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    return median(us);
}

double median_read_once_us(const oram::Oram& o, size_t ops, std::mt19937_64& rng) {
    const uint32_t n = o.params().capacity_n;
    std::vector<double> us;
    us.reserve(ops);
    for (size_t i = 0; i < ops; ++i) {
        uint32_t bid = static_cast<uint32_t>(rng() % n);
        auto t0 = Clock::now();
        (void)o.read_once(bid, nullptr);
        auto t1 = Clock::now();
        us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
    }
    return median(us);
}

double read_once_throughput(const oram::Oram& o, unsigned threads, size_t ops_per_thread,
                            uint64_t seed) {
    std::atomic<bool> go{false};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            std::mt19937_64 rng(seed + t);
            const uint32_t n = o.params().capacity_n;
            while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
            for (size_t i = 0; i < ops_per_thread; ++i)
                (void)o.read_once(static_cast<uint32_t>(rng() % n), nullptr);
        });
    }
    auto t0 = Clock::now();
    go.store(true, std::memory_order_release);
    for (auto& th : pool) th.join();
    auto t1 = Clock::now();
    double secs = std::chrono::duration<double>(t1 - t0).count();
    return static_cast<double>(ops_per_thread) * threads / secs;
}

std::vector<BenchRow> run_bench(const BenchConfig& cfg, std::ostream* progress) {
    std::vector<BenchRow> rows;
    for (auto strategy : cfg.strategies) {
        for (uint32_t n : cfg.n_values) {
            oram::OramParams params;
            params.capacity_n = n;
            params.payload_bytes = cfg.payload_bytes;
            params.strategy = strategy;
            Key256 master{};
            put_u64be(master.data(), cfg.seed);
            oram::Oram o = oram::Oram::init(params, cfg.seed, master);
            std::mt19937_64 rng(cfg.seed ^ n);
            if (progress)
                *progress << "# " << strategy_name(strategy) << " n=" << n << " warmup...\n";
            bench_warmup(o, cfg.warmup, rng);

            BenchRow std_row;
            std_row.strategy = strategy_name(strategy);
            std_row.n = n;
            std_row.mode = "standard";
            std_row.median_us = median_standard_us(o, cfg.ops, rng);
            std_row.ops_per_sec = 1e6 / std_row.median_us;
            rows.push_back(std_row);

            BenchRow ro = std_row;
            ro.mode = "read_once";
            ro.median_us = median_read_once_us(o, cfg.ops, rng);
            ro.ops_per_sec = 1e6 / ro.median_us;
            rows.push_back(ro);

            for (unsigned readers : cfg.reader_counts) {
                BenchRow mt = std_row;
                mt.mode = "read_once_mt";
                mt.readers = readers;
                mt.median_us = 0.0;
                mt.ops_per_sec = read_once_throughput(o, readers, cfg.ops, cfg.seed);
                rows.push_back(mt);
                if (progress)
                    *progress << "# " << strategy_name(strategy) << " n=" << n << " readers="
                              << readers << " " << mt.ops_per_sec << " ops/s\n";
            }
        }
    }
    return rows;
}

void write_bench_csv(const std::filesystem::path& file, const std::vector<BenchRow>& rows) {
    std::ofstream f(file, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + file.string());
    f << "strategy,n,mode,readers,median_us,ops_per_sec\n";
    for (const auto& r : rows)
        f << r.strategy << "," << r.n << "," << r.mode << "," << r.readers << "," << r.median_us
          << "," << r.ops_per_sec << "\n";
}

}  // namespace t3::harness
