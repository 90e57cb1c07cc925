#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace t3::harness {

// One leaf-revealing event in the access log: which interval, which
// logical block was requested, which leaf the path touched.
struct TraceEntry {
    uint64_t interval = 0;
    uint32_t bid = 0;
    uint32_t leaf = 0;
};

struct UniformityReport {
    size_t samples = 0;          // entries after (interval,bid) dedup
    size_t raw_entries = 0;
    uint32_t leaf_space = 0;
    size_t bins = 0;             // adjacent leaves merged until expected >= 5
    double chi2 = 0.0;
    size_t dof = 0;
    double p_value = 1.0;
    // Duplicate reads of one bid within one interval that revealed the
    // same leaf: the linkage window the design accepts between syncs.
    size_t duplicate_groups = 0;
    size_t linked_groups = 0;
    bool linkage_detected = false;
};

// Chi-square test of leaf uniformity. Duplicate (interval,bid) pairs
// are collapsed to their first occurrence before binning: re-reads
// necessarily repeat a leaf and would bias the statistic.
UniformityReport analyze_uniformity(const std::vector<TraceEntry>& log, uint32_t leaf_count);

void write_trace_csv(const std::filesystem::path& file, const std::vector<TraceEntry>& log);
std::vector<TraceEntry> read_trace_csv(const std::filesystem::path& file);

std::string report_to_string(const UniformityReport& r);

}  // namespace t3::harness
