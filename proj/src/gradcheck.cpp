#include "hwcl/gradcheck.hpp"

#include <cmath>
#include <cstdlib>
#include <random>

#include "hwcl/device_sim.hpp"
#include "hwcl/encoder.hpp"
#include "hwcl/error.hpp"

namespace hwcl {

double relative_error(double analytic, double numeric, double floor) {
    double denom = std::abs(analytic);
    if (std::abs(numeric) > denom) denom = std::abs(numeric);
    if (floor > denom) denom = floor;
    return std::abs(analytic - numeric) / denom;
}

namespace {

// Loss with the reward pinned, so FD probes exactly the function the
// analytic gradient differentiates.
double frozen_loss(const SimilarityMatrix& sim, const std::vector<std::size_t>& positives,
                   const LossConfig& config, const Matrix* frozen_reward) {
    if (config.variant == LossVariant::HardnessWeighted) {
        return hardness_weighted(sim, positives, config, RewardSpec::external(*frozen_reward)).loss;
    }
    return infonce(sim, positives, config).loss;
}

void rate_entry(double analytic, double numeric, const GradCheckOptions& opts,
                GradCheckReport& report) {
    if (std::abs(analytic) < opts.floor && std::abs(numeric) < opts.floor) return;
    const double rel = relative_error(analytic, numeric, opts.floor);
    if (rel > report.max_rel_error) report.max_rel_error = rel;
    report.entries_checked += 1;
}

} // namespace

GradCheckReport check_loss_gradient(const SimilarityMatrix& sim,
                                    const std::vector<std::size_t>& positives,
                                    const LossConfig& config, const GradCheckOptions& opts) {
    RewardSpec reward = config.variant == LossVariant::HardnessWeighted
                            ? RewardSpec::self_similarity()
                            : RewardSpec::zero();
    const LossResult base = contrastive_loss(sim, positives, config, reward);
    const Matrix* frozen = config.variant == LossVariant::HardnessWeighted ? &base.reward_matrix
                                                                           : nullptr;

    GradCheckReport report;
    SimilarityMatrix probe = sim;
    for (std::size_t i = 0; i < sim.values.rows; ++i) {
        for (std::size_t j = 0; j < sim.values.cols; ++j) {
            const double saved = probe.values(i, j);
            probe.values(i, j) = saved + opts.step;
            const double up = frozen_loss(probe, positives, config, frozen);
            probe.values(i, j) = saved - opts.step;
            const double down = frozen_loss(probe, positives, config, frozen);
            probe.values(i, j) = saved;
            rate_entry(base.grad_wrt_sim(i, j), (up - down) / (2.0 * opts.step), opts, report);
        }
    }
    report.passed = report.max_rel_error <= opts.tolerance;
    return report;
}

GradCheckReport check_loss_gradient_reward_recomputed(const SimilarityMatrix& sim,
                                                      const std::vector<std::size_t>& positives,
                                                      const LossConfig& config,
                                                      const GradCheckOptions& opts) {
    const RewardSpec reward = config.variant == LossVariant::HardnessWeighted
                                  ? RewardSpec::self_similarity()
                                  : RewardSpec::zero();
    const LossResult base = contrastive_loss(sim, positives, config, reward);

    GradCheckReport report;
    SimilarityMatrix probe = sim;
    for (std::size_t i = 0; i < sim.values.rows; ++i) {
        for (std::size_t j = 0; j < sim.values.cols; ++j) {
            const double saved = probe.values(i, j);
            probe.values(i, j) = saved + opts.step;
            const double up = contrastive_loss(probe, positives, config, reward).loss;
            probe.values(i, j) = saved - opts.step;
            const double down = contrastive_loss(probe, positives, config, reward).loss;
            probe.values(i, j) = saved;
            rate_entry(base.grad_wrt_sim(i, j), (up - down) / (2.0 * opts.step), opts, report);
        }
    }
    report.passed = report.max_rel_error <= opts.tolerance;
    return report;
}

namespace {

struct EncoderProbe {
    PolicyState state;
    RawPairBatch batch;
    LossConfig loss;
    Matrix frozen_reward; // empty unless hardness weighted

    double loss_at() const {
        const Matrix raw_q = encode_raw(state.query_tower, batch.queries);
        const Matrix raw_t = encode_raw(state.target(), batch.targets);
        const EmbeddingBatch emb = make_in_batch(raw_q, raw_t);
        const SimilarityMatrix sim = cosine_matrix(emb);
        return frozen_loss(sim, emb.positive_index, loss,
                           frozen_reward.empty() ? nullptr : &frozen_reward);
    }
};

void fd_params(EncoderProbe& probe, std::vector<double>& params, const std::vector<double>& analytic,
               std::size_t offset, const GradCheckOptions& opts, GradCheckReport& report) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + opts.step;
        const double up = probe.loss_at();
        params[i] = saved - opts.step;
        const double down = probe.loss_at();
        params[i] = saved;
        rate_entry(analytic[offset + i], (up - down) / (2.0 * opts.step), opts, report);
    }
}

std::vector<double> flatten(const TowerParams& t) {
    std::vector<double> out;
    out.reserve(t.w1.data.size() + t.b1.size() + t.w2.data.size() + t.b2.size());
    out.insert(out.end(), t.w1.data.begin(), t.w1.data.end());
    out.insert(out.end(), t.b1.begin(), t.b1.end());
    out.insert(out.end(), t.w2.data.begin(), t.w2.data.end());
    out.insert(out.end(), t.b2.begin(), t.b2.end());
    return out;
}

} // namespace

GradCheckReport check_encoder_gradient(std::uint64_t seed, const LossConfig& loss,
                                       const GradCheckOptions& opts) {
    constexpr std::size_t n = 6;
    constexpr std::size_t d_in = 5;
    constexpr std::size_t d_hidden = 4;
    constexpr std::size_t d_emb = 3;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    EncoderProbe probe;
    probe.state = init_policy(d_in, d_hidden, d_emb, false, seed);
    probe.batch.queries = Matrix(n, d_in);
    probe.batch.targets = Matrix(n, d_in);
    for (double& x : probe.batch.queries.data) x = unit(rng);
    for (double& x : probe.batch.targets.data) x = unit(rng);
    probe.loss = loss;

    if (loss.variant == LossVariant::HardnessWeighted) {
        const Matrix raw_q = encode_raw(probe.state.query_tower, probe.batch.queries);
        const Matrix raw_t = encode_raw(probe.state.target(), probe.batch.targets);
        const EmbeddingBatch emb = make_in_batch(raw_q, raw_t);
        const SimilarityMatrix sim = cosine_matrix(emb);
        probe.frozen_reward =
            detail::effective_reward(sim, emb.positive_index, loss, RewardSpec::self_similarity());
    }

    // backprop_step only exposes the update, so recover the analytic gradient
    // from the parameter delta; the lr multiply and divide cost two roundings,
    // orders of magnitude below the FD tolerance.
    TrainConfig step_config;
    step_config.learning_rate = 1.0;
    step_config.steps = 1;
    step_config.batch_size = n;
    step_config.loss = loss;
    PolicyState stepped = probe.state;
    backprop_step(stepped, probe.batch, step_config);

    const std::vector<double> before_q = flatten(probe.state.query_tower);
    const std::vector<double> after_q = flatten(stepped.query_tower);
    const std::vector<double> before_t = flatten(probe.state.target_tower);
    const std::vector<double> after_t = flatten(stepped.target_tower);
    std::vector<double> analytic;
    analytic.reserve(before_q.size() + before_t.size());
    for (std::size_t i = 0; i < before_q.size(); ++i) analytic.push_back(before_q[i] - after_q[i]);
    for (std::size_t i = 0; i < before_t.size(); ++i) analytic.push_back(before_t[i] - after_t[i]);

    GradCheckReport report;
    TowerParams& q = probe.state.query_tower;
    TowerParams& t = probe.state.target_tower;
    std::size_t offset = 0;
    fd_params(probe, q.w1.data, analytic, offset, opts, report);
    offset += q.w1.data.size();
    fd_params(probe, q.b1, analytic, offset, opts, report);
    offset += q.b1.size();
    fd_params(probe, q.w2.data, analytic, offset, opts, report);
    offset += q.w2.data.size();
    fd_params(probe, q.b2, analytic, offset, opts, report);
    offset += q.b2.size();
    fd_params(probe, t.w1.data, analytic, offset, opts, report);
    offset += t.w1.data.size();
    fd_params(probe, t.b1, analytic, offset, opts, report);
    offset += t.b1.size();
    fd_params(probe, t.w2.data, analytic, offset, opts, report);
    offset += t.w2.data.size();
    fd_params(probe, t.b2, analytic, offset, opts, report);

    report.passed = report.max_rel_error <= opts.tolerance;
    return report;
}

SimilarityMatrix random_similarity(std::size_t n, std::size_t m, std::uint64_t seed,
                                   std::vector<std::size_t>& positives_out) {
    if (n < 1 || m < 2) throw Error(ErrorCode::InvalidSpec, "need n >= 1 and m >= 2");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> sim_value(-1.0, 1.0);

    SimilarityMatrix sim;
    sim.values = Matrix(n, m);
    for (double& v : sim.values.data) v = sim_value(rng);
    sim.row_origin.resize(n);
    sim.col_origin.resize(m);
    for (std::size_t i = 0; i < n; ++i) sim.row_origin[i] = ShardOrigin{0, i};
    for (std::size_t j = 0; j < m; ++j) sim.col_origin[j] = ShardOrigin{0, j};

    positives_out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        positives_out[i] = static_cast<std::size_t>(rng() % m);
    }
    return sim;
}

} // namespace hwcl
