#pragma once

#include <cstddef>
#include <vector>

#include "hwcl/matrix.hpp"

namespace hwcl {

// One query/target feature pair with its generating cluster label.
struct PairSample {
    std::vector<double> query;
    std::vector<double> target;
    int cluster = -1;
};

struct PairDataset {
    std::size_t d_in = 0;
    std::vector<PairSample> pairs;

    std::size_t size() const { return pairs.size(); }
};

// Raw feature matrices for one training batch, rows paired by index.
struct RawPairBatch {
    Matrix queries; // n x d_in
    Matrix targets; // n x d_in
};

RawPairBatch select_pairs(const PairDataset& data, const std::vector<std::size_t>& indices);

} // namespace hwcl
