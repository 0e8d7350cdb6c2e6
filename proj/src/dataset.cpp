#include "hwcl/dataset.hpp"

#include <cstring>
#include <string>

#include "hwcl/error.hpp"

namespace hwcl {

RawPairBatch select_pairs(const PairDataset& data, const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw Error(ErrorCode::InvalidSpec, "empty batch selection");
    RawPairBatch batch;
    batch.queries = Matrix(indices.size(), data.d_in);
    batch.targets = Matrix(indices.size(), data.d_in);
    for (std::size_t row = 0; row < indices.size(); ++row) {
        const std::size_t idx = indices[row];
        if (idx >= data.pairs.size()) {
            throw Error(ErrorCode::IndexOutOfRange, "pair index " + std::to_string(idx) + " out of range");
        }
        const PairSample& sample = data.pairs[idx];
        if (sample.query.size() != data.d_in || sample.target.size() != data.d_in) {
            throw Error(ErrorCode::DimensionMismatch, "sample dim disagrees with dataset d_in");
        }
        std::memcpy(batch.queries.row(row), sample.query.data(), data.d_in * sizeof(double));
        std::memcpy(batch.targets.row(row), sample.target.data(), data.d_in * sizeof(double));
    }
    return batch;
}

} // namespace hwcl
