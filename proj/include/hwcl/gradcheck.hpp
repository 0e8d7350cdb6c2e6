#pragma once

#include <cstdint>
#include <cstddef>
#include <functional>

#include "hwcl/loss.hpp"

namespace hwcl {

// Central finite differences against the analytic gradients. Shared by the
// grad-check CLI subcommand and the acceptance suite.

struct GradCheckOptions {
    double step = 1e-6;        // finite-difference h
    double tolerance = 1e-4;   // max relative error allowed
    double floor = 1e-3;       // entries below this magnitude on both sides are not rated
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t entries_checked = 0;
    bool passed = false;
};

// |a - f| / max(|a|, |f|, floor).
double relative_error(double analytic, double numeric, double floor);

// Checks grad_wrt_sim of the configured loss on one similarity matrix. The
// hardness reward is frozen at its base-point values while perturbing, which
// is exactly what the stop-gradient semantics promise.
GradCheckReport check_loss_gradient(const SimilarityMatrix& sim,
                                    const std::vector<std::size_t>& positives,
                                    const LossConfig& config, const GradCheckOptions& opts);

// Same check, but the reward is re-derived from each perturbed similarity
// matrix. With alpha > 0 this must NOT match the analytic gradient; the
// mismatch is the observable footprint of the stop-gradient.
GradCheckReport check_loss_gradient_reward_recomputed(const SimilarityMatrix& sim,
                                                      const std::vector<std::size_t>& positives,
                                                      const LossConfig& config,
                                                      const GradCheckOptions& opts);

// End-to-end: perturbs every tower parameter of a small two-tower model and
// compares against the analytic parameter gradients from one backprop step.
GradCheckReport check_encoder_gradient(std::uint64_t seed, const LossConfig& loss,
                                       const GradCheckOptions& opts);

// Uniform random similarity matrix in [-1, 1] with random positives.
SimilarityMatrix random_similarity(std::size_t n, std::size_t m, std::uint64_t seed,
                                   std::vector<std::size_t>& positives_out);

} // namespace hwcl
