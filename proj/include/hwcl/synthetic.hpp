#pragma once

#include <cstdint>
#include <cstddef>

#include "hwcl/dataset.hpp"

namespace hwcl {

// Gaussian cluster construction with two noise scales. Cluster centers are
// unit-Gaussian; each pair gets an anchor at center + sigma_within noise, and
// the query/target are that anchor plus independent sigma_pair noise. Pairs
// sharing a cluster are structural hard negatives of one another; pairs from
// different clusters are easy negatives.
struct SyntheticSpec {
    std::size_t n_clusters = 8;
    std::size_t pairs_per_cluster = 16;
    std::size_t d_in = 12;
    double intra_cluster_noise = 0.35;  // sigma_within, anchor spread inside a cluster
    double query_target_noise = 0.15;   // sigma_pair, query/target spread around the anchor
    std::uint64_t seed = 1;

    void validate() const; // throws InvalidSpec
};

// Deterministic for a given spec; repeated calls produce identical bits.
PairDataset generate_dataset(const SyntheticSpec& spec);

// Stratified split: within each cluster the last ceil(fraction * pairs) pairs
// go to eval, the rest to train. Deterministic, no RNG.
struct TrainEvalSplit {
    PairDataset train;
    PairDataset eval;
};
TrainEvalSplit split_dataset(const PairDataset& data, double eval_fraction);

} // namespace hwcl
