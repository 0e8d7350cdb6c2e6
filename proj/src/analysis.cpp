#include "hwcl/analysis.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include <json.hpp>

#include "hwcl/error.hpp"

namespace hwcl {

namespace {

void validate_sim(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives) {
    if (sim.values.empty()) throw Error(ErrorCode::InvalidSpec, "empty similarity matrix");
    if (positives.size() != sim.values.rows) {
        throw Error(ErrorCode::ShapeMismatch, "positives length != row count");
    }
    for (std::size_t p : positives) {
        if (p >= sim.values.cols) throw Error(ErrorCode::IndexOutOfRange, "positive column out of range");
    }
}

} // namespace

NegativeClasses classify_negatives(const SimilarityMatrix& sim,
                                   const std::vector<std::size_t>& positives, std::size_t k) {
    validate_sim(sim, positives);
    if (k < 1) throw Error(ErrorCode::InvalidK, "k must be >= 1");
    const std::size_t m = sim.values.cols;
    if (m < 2) throw Error(ErrorCode::NoNegatives, "no non-positive columns to classify");

    const std::size_t n = sim.values.rows;
    const std::size_t take = std::min(k, m - 1);

    NegativeClasses classes;
    classes.k_hard = take;
    classes.k_easy = take;
    classes.hard.resize(n);
    classes.easy.resize(n);

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
        candidates.clear();
        for (std::size_t j = 0; j < m; ++j) {
            if (j != positives[i]) candidates.push_back(j);
        }
        const double* row = sim.values.row(i);

        auto harder = [row](std::size_t a, std::size_t b) {
            return row[a] != row[b] ? row[a] > row[b] : a < b;
        };
        auto easier = [row](std::size_t a, std::size_t b) {
            return row[a] != row[b] ? row[a] < row[b] : a < b;
        };

        std::vector<std::size_t> by_hard = candidates;
        std::sort(by_hard.begin(), by_hard.end(), harder);
        classes.hard[i].assign(by_hard.begin(), by_hard.begin() + static_cast<std::ptrdiff_t>(take));

        std::sort(candidates.begin(), candidates.end(), easier);
        classes.easy[i].assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take));
    }
    return classes;
}

double precision_at_1(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives) {
    validate_sim(sim, positives);
    const std::size_t n = sim.values.rows;
    const std::size_t m = sim.values.cols;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = sim.values.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < m; ++j) {
            if (row[j] > row[best]) best = j;
        }
        if (best == positives[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

double recall_at_k(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                   std::size_t k) {
    validate_sim(sim, positives);
    const std::size_t m = sim.values.cols;
    if (k < 1 || k > m) throw Error(ErrorCode::InvalidK, "k must be in [1, M]");
    const std::size_t n = sim.values.rows;

    std::vector<std::size_t> order(m);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = sim.values.row(i);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [row](std::size_t a, std::size_t b) {
            return row[a] != row[b] ? row[a] > row[b] : a < b;
        });
        for (std::size_t r = 0; r < k; ++r) {
            if (order[r] == positives[i]) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

SimilarityGapReport gap_report(const SimilarityMatrix& sim,
                               const std::vector<std::size_t>& positives, std::size_t k) {
    const NegativeClasses classes = classify_negatives(sim, positives, k);
    const std::size_t n = sim.values.rows;

    double pos_sum = 0.0;
    double hard_sum = 0.0;
    double easy_sum = 0.0;
    std::size_t hard_count = 0;
    std::size_t easy_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = sim.values.row(i);
        pos_sum += row[positives[i]];
        for (std::size_t j : classes.hard[i]) {
            hard_sum += row[j];
            ++hard_count;
        }
        for (std::size_t j : classes.easy[i]) {
            easy_sum += row[j];
            ++easy_count;
        }
    }

    SimilarityGapReport report;
    report.n_queries = n;
    report.k_hard = classes.k_hard;
    report.k_easy = classes.k_easy;
    report.mean_positive = pos_sum / static_cast<double>(n);
    report.mean_hard_negative = hard_sum / static_cast<double>(hard_count);
    report.mean_easy_negative = easy_sum / static_cast<double>(easy_count);
    report.hard_gap = report.mean_hard_negative - report.mean_positive;
    report.easy_gap = report.mean_easy_negative - report.mean_positive;
    report.precision_at_1 = precision_at_1(sim, positives);
    return report;
}

std::vector<double> uniform_bin_edges(double lo, double hi, std::size_t bins) {
    if (bins < 1 || !(lo < hi)) throw Error(ErrorCode::InvalidSpec, "need bins >= 1 and lo < hi");
    std::vector<double> edges(bins + 1);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) edges[i] = lo + static_cast<double>(i) * width;
    edges.back() = hi;
    return edges;
}

namespace {

std::size_t bin_of(double v, const std::vector<double>& edges) {
    if (!(v >= edges.front()) || !(v <= edges.back())) {
        throw Error(ErrorCode::OutOfRangeValue,
                    "value " + std::to_string(v) + " outside histogram range");
    }
    if (v == edges.back()) return edges.size() - 2;
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    return static_cast<std::size_t>(it - edges.begin()) - 1;
}

} // namespace

HistogramSpec histogram(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                        const NegativeClasses& classes, const std::vector<double>& bin_edges) {
    validate_sim(sim, positives);
    if (bin_edges.size() < 2 || !std::is_sorted(bin_edges.begin(), bin_edges.end()) ||
        std::adjacent_find(bin_edges.begin(), bin_edges.end()) != bin_edges.end()) {
        throw Error(ErrorCode::InvalidSpec, "bin edges must be strictly ascending, length >= 2");
    }
    const std::size_t n = sim.values.rows;
    if (classes.hard.size() != n || classes.easy.size() != n) {
        throw Error(ErrorCode::ShapeMismatch, "negative classes were built for a different matrix");
    }

    HistogramSpec hist;
    hist.bin_edges = bin_edges;
    hist.positive_counts.assign(bin_edges.size() - 1, 0);
    hist.hard_counts.assign(bin_edges.size() - 1, 0);
    hist.easy_counts.assign(bin_edges.size() - 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = sim.values.row(i);
        hist.positive_counts[bin_of(row[positives[i]], bin_edges)] += 1;
        for (std::size_t j : classes.hard[i]) hist.hard_counts[bin_of(row[j], bin_edges)] += 1;
        for (std::size_t j : classes.easy[i]) hist.easy_counts[bin_of(row[j], bin_edges)] += 1;
    }
    return hist;
}

std::string gap_report_to_json(const SimilarityGapReport& report) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["n_queries"] = report.n_queries;
    j["k_hard"] = report.k_hard;
    j["k_easy"] = report.k_easy;
    j["mean_positive"] = report.mean_positive;
    j["mean_hard_negative"] = report.mean_hard_negative;
    j["mean_easy_negative"] = report.mean_easy_negative;
    j["hard_gap"] = report.hard_gap;
    j["easy_gap"] = report.easy_gap;
    j["precision_at_1"] = report.precision_at_1;
    return j.dump(2);
}

std::string histogram_to_json(const HistogramSpec& hist) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["bin_edges"] = hist.bin_edges;
    j["positive_counts"] = hist.positive_counts;
    j["hard_counts"] = hist.hard_counts;
    j["easy_counts"] = hist.easy_counts;
    return j.dump(2);
}

} // namespace hwcl
