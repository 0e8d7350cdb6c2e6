#include "hwcl/embedding.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "hwcl/error.hpp"

namespace hwcl {

namespace {

// Row norms, rejecting degenerate rows.
std::vector<double> row_norms(const Matrix& m, const char* what) {
    std::vector<double> norms(m.rows);
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(m.rows);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        norms[static_cast<std::size_t>(i)] = norm2(m.row(static_cast<std::size_t>(i)), m.cols);
    }
    for (std::size_t i = 0; i < m.rows; ++i) {
        if (norms[i] <= kZeroNormThreshold) {
            throw Error(ErrorCode::ZeroVector,
                        std::string(what) + " row " + std::to_string(i) + " has zero norm");
        }
    }
    return norms;
}

} // namespace

void EmbeddingBatch::validate() const {
    if (queries.rows < 1 || targets.rows < 1) {
        throw Error(ErrorCode::InvalidSpec, "batch needs at least one query and one target");
    }
    if (queries.cols != targets.cols) {
        throw Error(ErrorCode::DimensionMismatch, "query/target embedding dims differ");
    }
    if (queries.cols < 2) {
        throw Error(ErrorCode::InvalidSpec, "embedding dim must be >= 2");
    }
    if (positive_index.size() != queries.rows) {
        throw Error(ErrorCode::ShapeMismatch, "positive_index length != query count");
    }
    for (std::size_t i = 0; i < positive_index.size(); ++i) {
        if (positive_index[i] >= targets.rows) {
            throw Error(ErrorCode::IndexOutOfRange,
                        "positive_index[" + std::to_string(i) + "] out of range");
        }
    }
    if (!all_finite(queries) || !all_finite(targets)) {
        throw Error(ErrorCode::InvalidSpec, "batch contains non-finite entries");
    }
    row_norms(queries, "query");
    row_norms(targets, "target");
}

EmbeddingBatch make_in_batch(Matrix queries, Matrix targets) {
    if (queries.rows != targets.rows) {
        throw Error(ErrorCode::ShapeMismatch, "in-batch pairing needs N == M");
    }
    EmbeddingBatch batch{std::move(queries), std::move(targets), {}};
    batch.positive_index.resize(batch.queries.rows);
    for (std::size_t i = 0; i < batch.positive_index.size(); ++i) batch.positive_index[i] = i;
    return batch;
}

std::vector<double> l2_normalize(const std::vector<double>& v) {
    if (!all_finite(v)) throw Error(ErrorCode::InvalidSpec, "non-finite vector");
    const double norm = norm2(v.data(), v.size());
    if (norm <= kZeroNormThreshold) {
        throw Error(ErrorCode::ZeroVector, "cannot normalize a zero vector");
    }
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
    return out;
}

SimilarityMatrix cosine_matrix(const EmbeddingBatch& batch) {
    const std::size_t n = batch.num_queries();
    const std::size_t m = batch.num_targets();
    const std::size_t d = batch.dim();
    if (batch.targets.cols != d) throw Error(ErrorCode::DimensionMismatch, "target dim mismatch");

    const std::vector<double> qn = row_norms(batch.queries, "query");
    const std::vector<double> tn = row_norms(batch.targets, "target");

    SimilarityMatrix sim;
    sim.values = Matrix(n, m);
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const double* q = batch.queries.row(i);
        double* out = sim.values.row(i);
        for (std::size_t j = 0; j < m; ++j) {
            out[j] = dot(q, batch.targets.row(j), d) / (qn[i] * tn[j]);
        }
    }

    sim.row_origin.resize(n);
    sim.col_origin.resize(m);
    for (std::size_t i = 0; i < n; ++i) sim.row_origin[i] = ShardOrigin{0, i};
    for (std::size_t j = 0; j < m; ++j) sim.col_origin[j] = ShardOrigin{0, j};
    return sim;
}

std::pair<Matrix, Matrix> cosine_backward(const EmbeddingBatch& batch, const Matrix& dl_dsim) {
    const std::size_t n = batch.num_queries();
    const std::size_t m = batch.num_targets();
    const std::size_t d = batch.dim();
    if (dl_dsim.rows != n || dl_dsim.cols != m) {
        throw Error(ErrorCode::ShapeMismatch, "upstream gradient shape != N x M");
    }

    const std::vector<double> qn = row_norms(batch.queries, "query");
    const std::vector<double> tn = row_norms(batch.targets, "target");

    // cos values are reused by both halves of the Jacobian.
    Matrix cos(n, m);
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const double* q = batch.queries.row(i);
        for (std::size_t j = 0; j < m; ++j) {
            cos(i, j) = dot(q, batch.targets.row(j), d) / (qn[i] * tn[j]);
        }
    }

    // dL/dq_i = sum_j g_ij * ( t_j/(|q_i||t_j|) - cos_ij * q_i/|q_i|^2 )
    Matrix dq(n, d);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const double* q = batch.queries.row(i);
        double* out = dq.row(i);
        double self_coeff = 0.0; // sum_j g_ij * cos_ij
        for (std::size_t j = 0; j < m; ++j) {
            const double g = dl_dsim(i, j);
            if (g == 0.0) continue;
            const double scale = g / (qn[i] * tn[j]);
            const double* t = batch.targets.row(j);
            for (std::size_t a = 0; a < d; ++a) out[a] += scale * t[a];
            self_coeff += g * cos(i, j);
        }
        const double inv_q2 = 1.0 / (qn[i] * qn[i]);
        for (std::size_t a = 0; a < d; ++a) out[a] -= self_coeff * q[a] * inv_q2;
    }

    // Symmetric role for the targets, parallel over columns so every
    // accumulation stays single-writer.
    Matrix dt(m, d);
    const std::ptrdiff_t colsn = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t jj = 0; jj < colsn; ++jj) {
        const std::size_t j = static_cast<std::size_t>(jj);
        const double* t = batch.targets.row(j);
        double* out = dt.row(j);
        double self_coeff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double g = dl_dsim(i, j);
            if (g == 0.0) continue;
            const double scale = g / (qn[i] * tn[j]);
            const double* q = batch.queries.row(i);
            for (std::size_t a = 0; a < d; ++a) out[a] += scale * q[a];
            self_coeff += g * cos(i, j);
        }
        const double inv_t2 = 1.0 / (tn[j] * tn[j]);
        for (std::size_t a = 0; a < d; ++a) out[a] -= self_coeff * t[a] * inv_t2;
    }

    return {std::move(dq), std::move(dt)};
}

} // namespace hwcl
