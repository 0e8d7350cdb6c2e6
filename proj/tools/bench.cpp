#include <cstdio>
#include <cstring>
#include <random>
#include <vector>

#include <omp.h>

#include "hwcl/embedding.hpp"
#include "hwcl/encoder.hpp"
#include "hwcl/loss.hpp"
#include "hwcl/serial_ref.hpp"

namespace {

hwcl::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> unit(0.0, 1.0);
    hwcl::Matrix m(rows, cols);
    for (double& x : m.data) x = unit(rng);
    return m;
}

bool bitwise_equal(const hwcl::Matrix& a, const hwcl::Matrix& b) {
    return a.same_shape(b) &&
           std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

template <typename F>
double time_reps(int reps, F&& fn) {
    fn(); // warmup, also materializes any lazy page faults
    const double t0 = omp_get_wtime();
    for (int r = 0; r < reps; ++r) fn();
    return (omp_get_wtime() - t0) / reps * 1e3;
}

bool all_equal = true;

void row(const char* name, double serial_ms, double parallel_ms, bool equal) {
    all_equal = all_equal && equal;
    std::printf("%-22s %10.3f %10.3f %9.2fx   %s\n", name, serial_ms, parallel_ms,
                serial_ms / parallel_ms, equal ? "bitwise-equal" : "MISMATCH");
}

} // namespace

int main() {
    constexpr std::size_t n = 256;
    constexpr std::size_t d = 64;
    constexpr int reps = 20;

    std::mt19937_64 rng(7);
    const hwcl::EmbeddingBatch batch =
        hwcl::make_in_batch(random_matrix(n, d, rng), random_matrix(n, d, rng));

    std::printf("threads=%d  batch=%zux%zu d=%zu reps=%d\n", omp_get_max_threads(), n, n, d, reps);
    std::printf("%-22s %10s %10s %10s\n", "kernel", "serial ms", "openmp ms", "speedup");

    hwcl::SimilarityMatrix sim_p;
    hwcl::SimilarityMatrix sim_s;
    {
        const double tp = time_reps(reps, [&] { sim_p = hwcl::cosine_matrix(batch); });
        const double ts = time_reps(reps, [&] { sim_s = hwcl::serial::cosine_matrix(batch); });
        row("cosine_matrix", ts, tp, bitwise_equal(sim_s.values, sim_p.values));
    }

    hwcl::LossConfig infonce_cfg;
    hwcl::LossConfig weighted_cfg;
    weighted_cfg.variant = hwcl::LossVariant::HardnessWeighted;
    hwcl::LossResult loss_p;
    hwcl::LossResult loss_s;
    {
        const double tp = time_reps(reps, [&] {
            loss_p = hwcl::infonce(sim_p, batch.positive_index, infonce_cfg);
        });
        const double ts = time_reps(reps, [&] {
            loss_s = hwcl::serial::infonce(sim_s, batch.positive_index, infonce_cfg);
        });
        row("infonce", ts, tp,
            bitwise_equal(loss_s.grad_wrt_sim, loss_p.grad_wrt_sim) && loss_s.loss == loss_p.loss);
    }
    {
        const auto reward = hwcl::RewardSpec::self_similarity();
        const double tp = time_reps(reps, [&] {
            loss_p = hwcl::hardness_weighted(sim_p, batch.positive_index, weighted_cfg, reward);
        });
        const double ts = time_reps(reps, [&] {
            loss_s = hwcl::serial::hardness_weighted(sim_s, batch.positive_index, weighted_cfg, reward);
        });
        row("hardness_weighted", ts, tp,
            bitwise_equal(loss_s.grad_wrt_sim, loss_p.grad_wrt_sim) && loss_s.loss == loss_p.loss);
    }

    {
        std::pair<hwcl::Matrix, hwcl::Matrix> back_p;
        std::pair<hwcl::Matrix, hwcl::Matrix> back_s;
        const double tp = time_reps(reps, [&] {
            back_p = hwcl::cosine_backward(batch, loss_p.grad_wrt_sim);
        });
        const double ts = time_reps(reps, [&] {
            back_s = hwcl::serial::cosine_backward(batch, loss_p.grad_wrt_sim);
        });
        row("cosine_backward", ts, tp,
            bitwise_equal(back_s.first, back_p.first) && bitwise_equal(back_s.second, back_p.second));
    }

    {
        const hwcl::PolicyState policy = hwcl::init_policy(d, 128, 32, false, 11);
        const hwcl::Matrix inputs = random_matrix(512, d, rng);
        hwcl::Matrix enc_p;
        hwcl::Matrix enc_s;
        const double tp = time_reps(reps, [&] { enc_p = hwcl::encode_raw(policy.query_tower, inputs); });
        const double ts = time_reps(reps, [&] {
            enc_s = hwcl::serial::encode_raw(policy.query_tower, inputs);
        });
        row("encode_raw", ts, tp, bitwise_equal(enc_s, enc_p));
    }

    return all_equal ? 0 : 1;
}
