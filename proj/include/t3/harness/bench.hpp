#pragma once

#include "t3/oram/oram.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace t3::harness {

struct BenchConfig {
    std::vector<uint32_t> n_values = {1u << 16};
    std::vector<oram::Strategy> strategies = {oram::Strategy::PathOram,
                                              oram::Strategy::CircuitOram};
    size_t payload_bytes = 64;
    size_t ops = 1000;
    size_t warmup = 100;
    std::vector<unsigned> reader_counts = {1, 2, 4};
    uint64_t seed = 42;
};

struct BenchRow {
    std::string strategy;
    uint32_t n = 0;
    std::string mode;  // standard | read_once | read_once_mt
    unsigned readers = 1;
    double median_us = 0.0;
    double ops_per_sec = 0.0;
};

// Timing primitives shared with the acceptance gate. Warmup writes
// populate the tree; timed phases measure single operations.
void bench_warmup(oram::Oram& o, size_t warmup, std::mt19937_64& rng);
double median_standard_us(oram::Oram& o, size_t ops, std::mt19937_64& rng);
double median_read_once_us(const oram::Oram& o, size_t ops, std::mt19937_64& rng);
// Aggregate read-once throughput of `threads` concurrent readers over
// one frozen tree, in operations per second.
double read_once_throughput(const oram::Oram& o, unsigned threads, size_t ops_per_thread,
                            uint64_t seed);

std::vector<BenchRow> run_bench(const BenchConfig& cfg, std::ostream* progress);
void write_bench_csv(const std::filesystem::path& file, const std::vector<BenchRow>& rows);

}  // namespace t3::harness
