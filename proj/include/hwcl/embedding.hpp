#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "hwcl/matrix.hpp"

namespace hwcl {

// Norms at or below this are treated as degenerate embeddings and rejected
// rather than clamped; a zero vector upstream is a bug, not a sample.
inline constexpr double kZeroNormThreshold = 1e-30;

// Identifies which logical device contributed a row or column of a
// similarity matrix, and at which local position.
struct ShardOrigin {
    int device_id = 0;
    std::size_t local_index = 0;

    bool operator==(const ShardOrigin&) const = default;
};

// Paired query/target embeddings for one logical batch. Query i's positive
// target sits at positive_index[i]; for plain in-batch training that is i.
struct EmbeddingBatch {
    Matrix queries;                          // N x d
    Matrix targets;                          // M x d
    std::vector<std::size_t> positive_index; // size N, entries in [0, M)

    std::size_t num_queries() const { return queries.rows; }
    std::size_t num_targets() const { return targets.rows; }
    std::size_t dim() const { return queries.cols; }

    // Throws InvalidSpec / IndexOutOfRange / ZeroVector on violated invariants.
    void validate() const;
};

// In-batch pairing: query i's positive is target i. Requires N == M.
EmbeddingBatch make_in_batch(Matrix queries, Matrix targets);

// N x M grid of query-target cosine similarities plus row/column provenance.
struct SimilarityMatrix {
    Matrix values;
    std::vector<ShardOrigin> row_origin;
    std::vector<ShardOrigin> col_origin;
};

// v / ||v||. Throws ZeroVector when ||v|| <= kZeroNormThreshold.
std::vector<double> l2_normalize(const std::vector<double>& v);

// values[i][j] = cos(queries[i], targets[j]). Inputs are not modified and
// need not be pre-normalized; cosine is scale invariant.
SimilarityMatrix cosine_matrix(const EmbeddingBatch& batch);

// Exact Jacobian of the cosine grid, accumulated against upstream dL/dS:
//   d cos(u,v)/du = v/(||u|| ||v||) - cos(u,v) * u/||u||^2
// Returns (dL/dqueries, dL/dtargets).
std::pair<Matrix, Matrix> cosine_backward(const EmbeddingBatch& batch, const Matrix& dl_dsim);

} // namespace hwcl
