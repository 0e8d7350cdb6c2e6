#include "hwcl/serial_ref.hpp"

#include <cmath>
#include <string>

#include "hwcl/error.hpp"

namespace hwcl::serial {

namespace {

std::vector<double> row_norms(const Matrix& m, const char* what) {
    std::vector<double> norms(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        norms[i] = norm2(m.row(i), m.cols);
        if (norms[i] <= kZeroNormThreshold) {
            throw Error(ErrorCode::ZeroVector,
                        std::string(what) + " row " + std::to_string(i) + " has zero norm");
        }
    }
    return norms;
}

void validate_loss_inputs(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                          const LossConfig& config) {
    if (config.tau <= 0.0 || !std::isfinite(config.tau)) {
        throw Error(ErrorCode::InvalidTemperature, "tau must be positive");
    }
    if (sim.values.empty()) throw Error(ErrorCode::InvalidSpec, "empty similarity matrix");
    if (positives.size() != sim.values.rows) {
        throw Error(ErrorCode::ShapeMismatch, "positives length != row count");
    }
    for (std::size_t p : positives) {
        if (p >= sim.values.cols) throw Error(ErrorCode::IndexOutOfRange, "positive out of range");
    }
}

LossResult run_loss(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                    const LossConfig& config, const Matrix* reward, LossVariant variant) {
    const std::size_t n = sim.values.rows;
    const std::size_t m = sim.values.cols;

    LossResult result;
    result.variant = variant;
    result.tau = config.tau;
    result.positives = positives;
    result.per_row_loss.resize(n);
    result.normalizers.resize(n);
    result.grad_wrt_sim = Matrix(n, m);
    result.reward_matrix = reward ? *reward : Matrix(n, m);
    result.policy_logits = Matrix(n, m);

    for (std::size_t i = 0; i < n; ++i) {
        const double* reward_row = reward ? reward->row(i) : nullptr;
        hwcl::detail::weighted_softmax_row(sim.values.row(i), m, positives[i], config.tau,
                                           reward_row, result.grad_wrt_sim.row(i),
                                           result.per_row_loss[i], result.normalizers[i]);
        double* logits = result.policy_logits.row(i);
        const double* s = sim.values.row(i);
        for (std::size_t j = 0; j < m; ++j) logits[j] = s[j] / config.tau;
    }

    const double scale = 1.0 / (config.tau * static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        double* g = result.grad_wrt_sim.row(i);
        for (std::size_t j = 0; j < m; ++j) g[j] *= scale;
    }

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += result.per_row_loss[i];
    result.loss = total / static_cast<double>(n);
    return result;
}

} // namespace

SimilarityMatrix cosine_matrix(const EmbeddingBatch& batch) {
    const std::size_t n = batch.num_queries();
    const std::size_t m = batch.num_targets();
    const std::size_t d = batch.dim();
    if (batch.targets.cols != d) throw Error(ErrorCode::DimensionMismatch, "target dim mismatch");

    const std::vector<double> qn = row_norms(batch.queries, "query");
    const std::vector<double> tn = row_norms(batch.targets, "target");

    SimilarityMatrix sim;
    sim.values = Matrix(n, m);
    for (std::size_t i = 0; i < n; ++i) {
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

    Matrix cos(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        const double* q = batch.queries.row(i);
        for (std::size_t j = 0; j < m; ++j) {
            cos(i, j) = dot(q, batch.targets.row(j), d) / (qn[i] * tn[j]);
        }
    }

    Matrix dq(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* q = batch.queries.row(i);
        double* out = dq.row(i);
        double self_coeff = 0.0;
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

    Matrix dt(m, d);
    for (std::size_t j = 0; j < m; ++j) {
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

LossResult infonce(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                   const LossConfig& config) {
    if (config.variant != LossVariant::InfoNCE) {
        throw Error(ErrorCode::WrongVariant, "config.variant is not infonce");
    }
    validate_loss_inputs(sim, positives, config);
    return run_loss(sim, positives, config, nullptr, LossVariant::InfoNCE);
}

LossResult hardness_weighted(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                             const LossConfig& config, const RewardSpec& reward) {
    if (config.variant != LossVariant::HardnessWeighted) {
        throw Error(ErrorCode::WrongVariant, "config.variant is not hardness_weighted");
    }
    if (config.alpha < 0.0 || !std::isfinite(config.alpha)) {
        throw Error(ErrorCode::InvalidSpec, "alpha must be >= 0");
    }
    validate_loss_inputs(sim, positives, config);
    const Matrix reward_matrix = hwcl::detail::effective_reward(sim, positives, config, reward);
    return run_loss(sim, positives, config, &reward_matrix, LossVariant::HardnessWeighted);
}

Matrix encode_raw(const TowerParams& tower, const Matrix& inputs) {
    if (inputs.cols != tower.d_in()) {
        throw Error(ErrorCode::DimensionMismatch, "input dim does not match tower d_in");
    }
    Matrix hidden(inputs.rows, tower.d_hidden());
    for (std::size_t i = 0; i < inputs.rows; ++i) {
        const double* x = inputs.row(i);
        double* h = hidden.row(i);
        for (std::size_t j = 0; j < hidden.cols; ++j) {
            h[j] = std::tanh(dot(x, tower.w1.row(j), inputs.cols) + tower.b1[j]);
        }
    }
    Matrix out(inputs.rows, tower.d_emb());
    for (std::size_t i = 0; i < inputs.rows; ++i) {
        const double* h = hidden.row(i);
        double* o = out.row(i);
        for (std::size_t j = 0; j < out.cols; ++j) {
            o[j] = dot(h, tower.w2.row(j), hidden.cols) + tower.b2[j];
        }
    }
    return out;
}

} // namespace hwcl::serial
