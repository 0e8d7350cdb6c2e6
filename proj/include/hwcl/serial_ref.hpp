#pragma once

#include "hwcl/embedding.hpp"
#include "hwcl/encoder.hpp"
#include "hwcl/loss.hpp"

// Straight-line single-threaded implementations of the hot kernels. The
// OpenMP kernels keep each row's accumulation order identical to these, so
// results must match bit for bit; tests and the benchmark hold them side by
// side.
namespace hwcl::serial {

SimilarityMatrix cosine_matrix(const EmbeddingBatch& batch);

std::pair<Matrix, Matrix> cosine_backward(const EmbeddingBatch& batch, const Matrix& dl_dsim);

LossResult infonce(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                   const LossConfig& config);

LossResult hardness_weighted(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                             const LossConfig& config, const RewardSpec& reward);

Matrix encode_raw(const TowerParams& tower, const Matrix& inputs);

} // namespace hwcl::serial
