#include "t3/harness/trace.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <bit>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace t3::harness {

UniformityReport analyze_uniformity(const std::vector<TraceEntry>& log, uint32_t leaf_count) {
    if (leaf_count < 2 || !std::has_single_bit(leaf_count))
        throw std::invalid_argument("leaf space must be a power of two >= 2");

    UniformityReport rep;
    rep.raw_entries = log.size();
    rep.leaf_space = leaf_count;

    // Collapse duplicates and measure the linkage they expose.
    std::map<std::pair<uint64_t, uint32_t>, std::pair<uint32_t, bool>> firsts;
    std::vector<uint32_t> leaves;
    leaves.reserve(log.size());
    for (const auto& e : log) {
        if (e.leaf >= leaf_count) throw std::invalid_argument("leaf outside leaf space");
        auto key = std::make_pair(e.interval, e.bid);
        auto it = firsts.find(key);
        if (it == firsts.end()) {
            firsts.emplace(key, std::make_pair(e.leaf, false));
            leaves.push_back(e.leaf);
        } else {
            if (!it->second.second) {
                it->second.second = true;
                ++rep.duplicate_groups;
            }
            if (it->second.first == e.leaf) ++rep.linked_groups;
        }
    }
    rep.samples = leaves.size();
    rep.linkage_detected = rep.linked_groups > 0;
    if (rep.samples < 10) throw std::invalid_argument("too few samples for a uniformity test");

    // Merge adjacent leaves until every bin expects at least 5 hits.
    size_t bins = leaf_count;
    unsigned shift = 0;
    while (bins > 2 && static_cast<double>(rep.samples) / static_cast<double>(bins) < 5.0) {
        bins /= 2;
        ++shift;
    }
    rep.bins = bins;

    std::vector<uint64_t> counts(bins, 0);
    for (uint32_t leaf : leaves) ++counts[leaf >> shift];
    double expected = static_cast<double>(rep.samples) / static_cast<double>(bins);
    double chi2 = 0;
    for (uint64_t c : counts) {
        double d = static_cast<double>(c) - expected;
        chi2 += d * d / expected;
    }
    rep.chi2 = chi2;
    rep.dof = bins - 1;
    boost::math::chi_squared dist(static_cast<double>(rep.dof));
    rep.p_value = boost::math::cdf(boost::math::complement(dist, chi2));
    return rep;
}

void write_trace_csv(const std::filesystem::path& file, const std::vector<TraceEntry>& log) {
    std::ofstream f(file, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + file.string());
    f << "interval,bid,leaf\n";
    for (const auto& e : log) f << e.interval << "," << e.bid << "," << e.leaf << "\n";
}

std::vector<TraceEntry> read_trace_csv(const std::filesystem::path& file) {
    std::ifstream f(file);
    if (!f) throw std::runtime_error("cannot open " + file.string());
    std::vector<TraceEntry> log;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (first && line.rfind("interval", 0) == 0) {
            first = false;
            continue;
        }
        first = false;
        TraceEntry e;
        char comma;
        std::istringstream ss(line);
        if (!(ss >> e.interval >> comma >> e.bid >> comma >> e.leaf))
            throw std::runtime_error("bad trace line: " + line);
        log.push_back(e);
    }
    return log;
}

std::string report_to_string(const UniformityReport& r) {
    std::ostringstream out;
    out << "samples=" << r.samples << " (raw " << r.raw_entries << ")"
        << " leaves=" << r.leaf_space << " bins=" << r.bins << " chi2=" << r.chi2
        << " dof=" << r.dof << " p=" << r.p_value << " duplicate_groups=" << r.duplicate_groups
        << " linked_groups=" << r.linked_groups
        << (r.linkage_detected ? " linkage=yes" : " linkage=no");
    return out.str();
}

}  // namespace t3::harness
