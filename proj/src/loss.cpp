#include "hwcl/loss.hpp"

#include <cmath>
#include <cstddef>
#include <string>

#include "hwcl/error.hpp"

namespace hwcl {

const char* loss_variant_name(LossVariant v) {
    switch (v) {
        case LossVariant::InfoNCE: return "infonce";
        case LossVariant::HardnessWeighted: return "hardness_weighted";
        case LossVariant::BtPairwise: return "bt_pairwise";
    }
    return "unknown";
}

LossVariant loss_variant_from_name(const std::string& name) {
    if (name == "infonce") return LossVariant::InfoNCE;
    if (name == "hardness_weighted") return LossVariant::HardnessWeighted;
    if (name == "bt_pairwise") return LossVariant::BtPairwise;
    throw Error(ErrorCode::InvalidSpec, "unknown loss variant '" + name + "'");
}

namespace detail {

void weighted_softmax_row(const double* sim_row, std::size_t m, std::size_t pos, double tau,
                          const double* reward_row, double* residual, double& row_loss,
                          double& log_z) {
    // Logits: s_j/tau plus the (detached) reward on negatives. The positive
    // never carries a reward.
    double max_logit = sim_row[pos] / tau;
    std::size_t arg_max = pos;
    for (std::size_t j = 0; j < m; ++j) {
        if (j == pos) continue;
        const double logit = sim_row[j] / tau + (reward_row ? reward_row[j] : 0.0);
        if (logit > max_logit) {
            max_logit = logit;
            arg_max = j;
        }
    }

    // log Z = max + log1p(sum of the non-max exponentials). Folding the max
    // term into log1p keeps well-separated rows exact down to ~1e-300 losses
    // instead of flushing them to zero at 1 + tiny.
    double rest = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        if (j == arg_max) continue;
        const double logit = j == pos ? sim_row[j] / tau
                                      : sim_row[j] / tau + (reward_row ? reward_row[j] : 0.0);
        rest += std::exp(logit - max_logit);
    }
    log_z = max_logit + std::log1p(rest);

    const double pos_logit = sim_row[pos] / tau;
    row_loss = arg_max == pos ? std::log1p(rest) : log_z - pos_logit;
    if (row_loss < 0.0) row_loss = 0.0; // guards the last-ulp case, loss is >= 0 by construction

    for (std::size_t j = 0; j < m; ++j) {
        const double logit = j == pos ? pos_logit
                                      : sim_row[j] / tau + (reward_row ? reward_row[j] : 0.0);
        residual[j] = std::exp(logit - log_z);
    }
    residual[pos] -= 1.0;
}

Matrix effective_reward(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                        const LossConfig& config, const RewardSpec& reward) {
    const std::size_t n = sim.values.rows;
    const std::size_t m = sim.values.cols;
    Matrix out(n, m);
    switch (reward.kind) {
        case RewardSpec::Kind::Zero:
            break;
        case RewardSpec::Kind::SelfSimilarity:
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < m; ++j) {
                    out(i, j) = config.alpha * sim.values(i, j);
                }
            }
            break;
        case RewardSpec::Kind::External: {
            if (!reward.external_values) {
                throw Error(ErrorCode::RewardShapeMismatch, "external reward matrix missing");
            }
            const Matrix& ext = *reward.external_values;
            if (ext.rows != n || ext.cols != m) {
                throw Error(ErrorCode::RewardShapeMismatch, "external reward matrix is not N x M");
            }
            if (!all_finite(ext)) {
                throw Error(ErrorCode::InvalidSpec, "external reward matrix has non-finite entries");
            }
            out = ext;
            break;
        }
    }
    for (std::size_t i = 0; i < n; ++i) out(i, positives[i]) = 0.0;
    return out;
}

} // namespace detail

namespace {

void validate_loss_inputs(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                          const LossConfig& config) {
    if (config.tau <= 0.0 || !std::isfinite(config.tau)) {
        throw Error(ErrorCode::InvalidTemperature, "tau must be positive");
    }
    if (sim.values.empty()) throw Error(ErrorCode::InvalidSpec, "empty similarity matrix");
    if (positives.size() != sim.values.rows) {
        throw Error(ErrorCode::ShapeMismatch, "positives length != row count");
    }
    for (std::size_t i = 0; i < positives.size(); ++i) {
        if (positives[i] >= sim.values.cols) {
            throw Error(ErrorCode::IndexOutOfRange,
                        "positive column " + std::to_string(positives[i]) + " out of range");
        }
    }
}

// Shared forward/backward over all rows. reward == nullptr means plain
// InfoNCE. Rows are independent; the mean and its scaling happen afterwards
// in fixed row order.
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

    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const double* reward_row = reward ? reward->row(i) : nullptr;
        detail::weighted_softmax_row(sim.values.row(i), m, positives[i], config.tau, reward_row,
                                     result.grad_wrt_sim.row(i), result.per_row_loss[i],
                                     result.normalizers[i]);
        double* logits = result.policy_logits.row(i);
        const double* s = sim.values.row(i);
        for (std::size_t j = 0; j < m; ++j) logits[j] = s[j] / config.tau;
    }

    // Residual rows -> gradient of the mean loss.
    const double scale = 1.0 / (config.tau * static_cast<double>(n));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < rows; ++ii) {
        double* g = result.grad_wrt_sim.row(static_cast<std::size_t>(ii));
        for (std::size_t j = 0; j < m; ++j) g[j] *= scale;
    }

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += result.per_row_loss[i];
    result.loss = total / static_cast<double>(n);
    return result;
}

} // namespace

LossResult infonce(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                   const LossConfig& config) {
    if (config.variant != LossVariant::InfoNCE) {
        throw Error(ErrorCode::WrongVariant, "config.variant is not infonce");
    }
    validate_loss_inputs(sim, positives, config);
    return run_loss(sim, positives, config, nullptr, LossVariant::InfoNCE);
}

double bt_pairwise(double r1, double r2) {
    if (!std::isfinite(r1) || !std::isfinite(r2)) {
        throw Error(ErrorCode::InvalidSpec, "non-finite rewards");
    }
    // softplus(r2 - r1), stable on both sides
    const double x = r2 - r1;
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
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
    const Matrix reward_matrix = detail::effective_reward(sim, positives, config, reward);
    return run_loss(sim, positives, config, &reward_matrix, LossVariant::HardnessWeighted);
}

LossResult contrastive_loss(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                            const LossConfig& config, const RewardSpec& reward) {
    switch (config.variant) {
        case LossVariant::InfoNCE: return infonce(sim, positives, config);
        case LossVariant::HardnessWeighted: return hardness_weighted(sim, positives, config, reward);
        case LossVariant::BtPairwise:
            throw Error(ErrorCode::WrongVariant, "bt_pairwise is a scalar objective, not a batch loss");
    }
    throw Error(ErrorCode::InvalidSpec, "unreachable variant");
}

std::vector<GradientFactor> loss_gradient_decomposition(const LossResult& result) {
    if (result.variant != LossVariant::HardnessWeighted) {
        throw Error(ErrorCode::WrongVariant, "decomposition is defined for hardness_weighted results");
    }
    std::vector<GradientFactor> factors;
    const std::size_t n = result.grad_wrt_sim.rows;
    const std::size_t m = result.grad_wrt_sim.cols;
    factors.reserve(n * (m > 0 ? m - 1 : 0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (j == result.positives[i]) continue;
            GradientFactor f;
            f.row = i;
            f.col = j;
            f.reward_weight = std::exp(result.reward_matrix(i, j));
            f.policy_prob = std::exp(result.policy_logits(i, j) - result.normalizers[i]);
            factors.push_back(f);
        }
    }
    return factors;
}

} // namespace hwcl
