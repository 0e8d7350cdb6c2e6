#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hwcl/embedding.hpp"
#include "hwcl/matrix.hpp"

namespace hwcl {

enum class LossVariant {
    InfoNCE,
    HardnessWeighted,
    BtPairwise,
};

const char* loss_variant_name(LossVariant v);
LossVariant loss_variant_from_name(const std::string& name);

struct LossConfig {
    double tau = 0.02;   // temperature; similarities are divided by it
    double alpha = 9.0;  // hardness weight on negative pairs
    LossVariant variant = LossVariant::InfoNCE;
};

// How the per-negative hardness reward is obtained.
//   SelfSimilarity: reward = alpha * s_ij, detached from the gradient.
//   External:       caller-supplied N x M matrix (manual hardness labels or a
//                   separate estimator); positives are still forced to 0.
//   Zero:           no weighting; reduces the weighted loss to the plain one.
struct RewardSpec {
    enum class Kind { SelfSimilarity, External, Zero };

    Kind kind = Kind::SelfSimilarity;
    std::optional<Matrix> external_values;

    static RewardSpec self_similarity() { return RewardSpec{Kind::SelfSimilarity, std::nullopt}; }
    static RewardSpec external(Matrix values) { return RewardSpec{Kind::External, std::move(values)}; }
    static RewardSpec zero() { return RewardSpec{Kind::Zero, std::nullopt}; }
};

struct LossResult {
    LossVariant variant = LossVariant::InfoNCE;
    double loss = 0.0;                      // mean over rows of per_row_loss
    std::vector<double> per_row_loss;       // N, each >= 0
    std::vector<double> normalizers;        // log Z_i per row
    Matrix grad_wrt_sim;                    // d(mean loss)/ds_ij, N x M
    Matrix reward_matrix;                   // reward used per entry, 0 on positives
    Matrix policy_logits;                   // s_ij / tau, kept for the gradient decomposition
    std::vector<std::size_t> positives;     // positive column per row
    double tau = 0.0;
};

// Standard temperature-scaled softmax contrastive loss. Per row:
//   L_i = -log( e^{s_ip/tau} / sum_j e^{s_ij/tau} )
// computed via log-sum-exp over the row maximum. grad_wrt_sim carries the
// exact analytic gradient of the mean loss: (softmax - onehot_p) / (tau * N).
LossResult infonce(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                   const LossConfig& config);

// Pairwise preference loss on two already temperature-scaled rewards:
//   -log( e^{r1} / (e^{r1} + e^{r2}) )  ==  softplus(r2 - r1).
double bt_pairwise(double r1, double r2);

// Hardness-weighted contrastive loss. Negative pair (i,j) picks up a reward
// exponent r_ij on top of its logit:
//   L_i = -log( e^{s_ip/tau} / ( e^{s_ip/tau} + sum_{j!=p} e^{s_ij/tau + r_ij} ) )
// The reward is a constant during differentiation (stop-gradient): the
// gradient carries no dr/ds term, so harder negatives get larger weights but
// the weights themselves do not backpropagate.
LossResult hardness_weighted(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                             const LossConfig& config, const RewardSpec& reward);

// Dispatch on config.variant (InfoNCE ignores the reward spec).
LossResult contrastive_loss(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                            const LossConfig& config, const RewardSpec& reward);

// One factor pair per negative entry: the negative-pair gradient is
//   reward_weight * policy_prob / (tau * N)
// with reward_weight = e^{r_ij} and policy_prob = e^{s_ij/tau} / Z_i.
struct GradientFactor {
    std::size_t row = 0;
    std::size_t col = 0;
    double reward_weight = 0.0;
    double policy_prob = 0.0;
};

// Recomputes the two factors from the stored rewards and normalizers so the
// gradient's multiplicative structure can be checked entrywise.
// Throws WrongVariant unless the result came from hardness_weighted.
std::vector<GradientFactor> loss_gradient_decomposition(const LossResult& result);

namespace detail {

// Per-row forward + softmax residual shared by every loss path. Writes the
// residual row (prob_j for j != p, prob_p - 1 at the positive) to residual,
// which the callers scale by 1/(tau * N). reward_row may be null (all zero).
void weighted_softmax_row(const double* sim_row, std::size_t m, std::size_t pos, double tau,
                          const double* reward_row, double* residual, double& row_loss,
                          double& log_z);

// Effective reward matrix for a spec: zero on positives, alpha * s_ij for
// SelfSimilarity, caller values elsewhere. Throws RewardShapeMismatch.
Matrix effective_reward(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                        const LossConfig& config, const RewardSpec& reward);

} // namespace detail

} // namespace hwcl
