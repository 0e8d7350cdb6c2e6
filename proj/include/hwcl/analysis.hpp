#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hwcl/embedding.hpp"

namespace hwcl {

// Per-query split of the non-positive candidates into the top-k most similar
// (hard) and bottom-k least similar (easy) negatives.
struct NegativeClasses {
    std::size_t k_hard = 0;
    std::size_t k_easy = 0;
    std::vector<std::vector<std::size_t>> hard; // per query, column indices
    std::vector<std::vector<std::size_t>> easy;
};

// Mean similarities per class and their gaps against the positives. Gaps are
// negative minus positive, so more negative means better separation.
struct SimilarityGapReport {
    double mean_positive = 0.0;
    double mean_hard_negative = 0.0;
    double mean_easy_negative = 0.0;
    double hard_gap = 0.0;
    double easy_gap = 0.0;
    double precision_at_1 = 0.0;
    std::size_t n_queries = 0;
    std::size_t k_hard = 0;
    std::size_t k_easy = 0;
};

struct HistogramSpec {
    std::vector<double> bin_edges; // sorted, length >= 2
    // One count vector per class, each of length bin_edges.size() - 1.
    std::vector<std::size_t> positive_counts;
    std::vector<std::size_t> hard_counts;
    std::vector<std::size_t> easy_counts;
};

// Per query: hard = top-min(k, M-1) non-positive similarities, easy =
// bottom-min(k, M-1). Ties broken by ascending column index. Throws
// NoNegatives when M == 1, InvalidK when k < 1.
NegativeClasses classify_negatives(const SimilarityMatrix& sim,
                                   const std::vector<std::size_t>& positives, std::size_t k = 5);

SimilarityGapReport gap_report(const SimilarityMatrix& sim,
                               const std::vector<std::size_t>& positives, std::size_t k = 5);

// Fraction of queries whose argmax column (ties -> lowest index) is the
// positive target.
double precision_at_1(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives);

// Fraction of queries whose positive lands in the top-k columns, stable
// tie-break by ascending column index. Throws InvalidK unless 1 <= k <= M.
double recall_at_k(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                   std::size_t k);

// Bins are half-open [lo, hi) except the last, which is closed. Values on an
// edge fall into the bin to its right. Throws OutOfRangeValue for values
// outside [edges.front(), edges.back()].
HistogramSpec histogram(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                        const NegativeClasses& classes, const std::vector<double>& bin_edges);

std::vector<double> uniform_bin_edges(double lo, double hi, std::size_t bins);

// JSON serializations, schema_version 1.
std::string gap_report_to_json(const SimilarityGapReport& report);
std::string histogram_to_json(const HistogramSpec& hist);

} // namespace hwcl
