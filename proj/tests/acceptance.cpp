// Acceptance harness. Each criterion prints exactly one PASS/FAIL line with
// its measured quantities and pinned tolerances; the process exits 0 only if
// every criterion passes. argv[1] names the CLI binary (criterion 10 shells
// out to it for the determinism check).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hwcl/analysis.hpp"
#include "hwcl/device_sim.hpp"
#include "hwcl/embedding.hpp"
#include "hwcl/encoder.hpp"
#include "hwcl/experiment.hpp"
#include "hwcl/gradcheck.hpp"
#include "hwcl/io.hpp"
#include "hwcl/loss.hpp"
#include "hwcl/matrix.hpp"
#include "hwcl/synthetic.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void verdict(int criterion, bool ok, const std::string& detail) {
    std::printf("criterion %2d %s  %s\n", criterion, ok ? "PASS" : "FAIL", detail.c_str());
}

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

hwcl::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    hwcl::Matrix m(rows, cols);
    for (double& v : m.data) v = dist(gen);
    return m;
}

hwcl::LossConfig loss_config(hwcl::LossVariant variant, double alpha) {
    hwcl::LossConfig config;
    config.tau = 0.02;
    config.alpha = alpha;
    config.variant = variant;
    return config;
}

struct Instance {
    hwcl::SimilarityMatrix sim;
    std::vector<std::size_t> positives;
};

Instance random_instance(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    const std::size_t n = 4 + gen() % 9; // 4..12
    const std::size_t m = 4 + gen() % 9;
    Instance inst;
    inst.sim = hwcl::random_similarity(n, m, seed, inst.positives);
    return inst;
}

// Criterion 1: analytic grad_wrt_sim of both losses matches frozen-reward
// central finite differences, max relative error < 1e-4, under 10 s.
bool criterion_1() {
    const auto start = Clock::now();
    hwcl::GradCheckOptions opts; // step 1e-6, tolerance 1e-4, floor 1e-3
    const double alphas[] = {0.0, 3.0, 9.0};
    double max_rel = 0.0;
    std::size_t entries = 0;
    for (int i = 0; i < 50; ++i) {
        const Instance inst = random_instance(1000 + static_cast<std::uint64_t>(i));
        const double alpha = alphas[i % 3];
        for (const hwcl::LossVariant variant :
             {hwcl::LossVariant::InfoNCE, hwcl::LossVariant::HardnessWeighted}) {
            const hwcl::GradCheckReport r = hwcl::check_loss_gradient(
                inst.sim, inst.positives, loss_config(variant, alpha), opts);
            max_rel = std::max(max_rel, r.max_rel_error);
            entries += r.entries_checked;
        }
    }
    const double elapsed = seconds_since(start);
    const bool ok = max_rel < 1e-4 && elapsed < 10.0;
    verdict(1, ok,
            fmt("gradient oracle: max_rel %.3e < 1e-4 over 50 instances x 2 losses "
                "(%zu entries, %.2f s < 10 s)",
                max_rel, entries, elapsed));
    return ok;
}

// Criterion 2: recomputing the reward during finite differences must break
// agreement by more than 10x the tolerance, while frozen rewards agree.
bool criterion_2() {
    hwcl::GradCheckOptions opts;
    const hwcl::LossConfig config = loss_config(hwcl::LossVariant::HardnessWeighted, 9.0);
    double frozen_max = 0.0;
    double recomputed_min = 1e300;
    for (int i = 0; i < 50; ++i) {
        const Instance inst = random_instance(1000 + static_cast<std::uint64_t>(i));
        frozen_max = std::max(
            frozen_max,
            hwcl::check_loss_gradient(inst.sim, inst.positives, config, opts).max_rel_error);
        recomputed_min = std::min(recomputed_min,
                                  hwcl::check_loss_gradient_reward_recomputed(
                                      inst.sim, inst.positives, config, opts)
                                      .max_rel_error);
    }
    const bool ok = frozen_max < 1e-4 && recomputed_min > 1e-3;
    verdict(2, ok,
            fmt("stop-gradient discriminator: frozen max_rel %.3e < 1e-4, recomputed "
                "min_rel %.3e > 1e-3 (alpha=9)",
                frozen_max, recomputed_min));
    return ok;
}

// Criterion 3: hardness_weighted at alpha=0 equals infonce to 1e-14 in loss
// and gradient on 100 random instances.
bool criterion_3() {
    double max_diff = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Instance inst = random_instance(2000 + static_cast<std::uint64_t>(i));
        const hwcl::LossResult plain =
            hwcl::infonce(inst.sim, inst.positives, loss_config(hwcl::LossVariant::InfoNCE, 0.0));
        const hwcl::LossResult weighted = hwcl::hardness_weighted(
            inst.sim, inst.positives, loss_config(hwcl::LossVariant::HardnessWeighted, 0.0),
            hwcl::RewardSpec::self_similarity());
        max_diff = std::max(max_diff, std::fabs(plain.loss - weighted.loss));
        for (std::size_t e = 0; e < plain.grad_wrt_sim.data.size(); ++e) {
            max_diff = std::max(
                max_diff, std::fabs(plain.grad_wrt_sim.data[e] - weighted.grad_wrt_sim.data[e]));
        }
    }
    const bool ok = max_diff <= 1e-14;
    verdict(3, ok,
            fmt("alpha=0 reduction: max |weighted - plain| %.3e <= 1e-14 over 100 instances "
                "(loss and every gradient entry)",
                max_diff));
    return ok;
}

// Criterion 4: the per-negative gradient factors reconstruct grad_wrt_sim to
// 1e-10, and negative gradients increase strictly with similarity.
bool criterion_4() {
    const hwcl::LossConfig config = loss_config(hwcl::LossVariant::HardnessWeighted, 9.0);
    double max_rel = 0.0;
    std::size_t monotone_violations = 0;
    std::size_t factors_seen = 0;
    for (int i = 0; i < 20; ++i) {
        const Instance inst = random_instance(3000 + static_cast<std::uint64_t>(i));
        const hwcl::LossResult result = hwcl::hardness_weighted(
            inst.sim, inst.positives, config, hwcl::RewardSpec::self_similarity());
        const std::size_t n = result.grad_wrt_sim.rows;
        const double scale = 1.0 / (config.tau * static_cast<double>(n));

        const std::vector<hwcl::GradientFactor> factors = hwcl::loss_gradient_decomposition(result);
        factors_seen += factors.size();
        for (const hwcl::GradientFactor& f : factors) {
            const double reconstructed = f.reward_weight * f.policy_prob * scale;
            max_rel = std::max(max_rel,
                               hwcl::relative_error(reconstructed,
                                                    result.grad_wrt_sim(f.row, f.col), 1e-300));
        }

        for (std::size_t r = 0; r < n; ++r) {
            std::vector<std::pair<double, double>> by_sim; // (similarity, gradient)
            for (std::size_t c = 0; c < result.grad_wrt_sim.cols; ++c) {
                if (c == result.positives[r]) continue;
                by_sim.emplace_back(inst.sim.values(r, c), result.grad_wrt_sim(r, c));
            }
            std::sort(by_sim.begin(), by_sim.end());
            for (std::size_t j = 1; j < by_sim.size(); ++j) {
                if (by_sim[j].first - by_sim[j - 1].first < 1e-12) continue; // unrated tie
                if (!(by_sim[j].second > by_sim[j - 1].second)) ++monotone_violations;
            }
        }
    }
    const bool ok = max_rel <= 1e-10 && monotone_violations == 0;
    verdict(4, ok,
            fmt("gradient factorization: reconstruction max_rel %.3e <= 1e-10 over %zu "
                "factors, %zu monotonicity violations",
                max_rel, factors_seen, monotone_violations));
    return ok;
}

// Criterion 5: sharded cross-device loss equals the monolithic computation to
// 1e-12 for K in {1,2,4,8} partitions of one 64-pair batch.
bool criterion_5() {
    const std::size_t n = 64;
    const std::size_t d = 16;
    const hwcl::EmbeddingBatch mono =
        hwcl::make_in_batch(random_matrix(n, d, 501), random_matrix(n, d, 502));
    const hwcl::SimilarityMatrix mono_sim = hwcl::cosine_matrix(mono);

    double max_diff = 0.0;
    for (const hwcl::LossVariant variant :
         {hwcl::LossVariant::InfoNCE, hwcl::LossVariant::HardnessWeighted}) {
        const hwcl::LossConfig config = loss_config(variant, 9.0);
        const hwcl::LossResult expected = hwcl::contrastive_loss(
            mono_sim, mono.positive_index, config, hwcl::RewardSpec::self_similarity());
        for (const int k : {1, 2, 4, 8}) {
            std::vector<hwcl::DeviceShard> shards;
            const std::size_t rows = n / static_cast<std::size_t>(k);
            for (int dev = 0; dev < k; ++dev) {
                hwcl::DeviceShard shard;
                shard.device_id = dev;
                shard.local_batch.queries = hwcl::Matrix(rows, d);
                shard.local_batch.targets = hwcl::Matrix(rows, d);
                for (std::size_t r = 0; r < rows; ++r) {
                    const std::size_t src = static_cast<std::size_t>(dev) * rows + r;
                    for (std::size_t c = 0; c < d; ++c) {
                        shard.local_batch.queries(r, c) = mono.queries(src, c);
                        shard.local_batch.targets(r, c) = mono.targets(src, c);
                    }
                    shard.local_batch.positive_index.push_back(r);
                }
                shards.push_back(std::move(shard));
            }
            const hwcl::CrossDeviceResult sharded =
                hwcl::cross_device_loss(shards, config, hwcl::RewardSpec::self_similarity());
            max_diff = std::max(max_diff, std::fabs(sharded.total.loss - expected.loss));
            for (std::size_t e = 0; e < expected.grad_wrt_sim.data.size(); ++e) {
                max_diff = std::max(max_diff, std::fabs(sharded.total.grad_wrt_sim.data[e] -
                                                        expected.grad_wrt_sim.data[e]));
            }
            for (std::size_t r = 0; r < n; ++r) {
                max_diff = std::max(max_diff, std::fabs(sharded.total.per_row_loss[r] -
                                                        expected.per_row_loss[r]));
            }
        }
    }
    const bool ok = max_diff <= 1e-12;
    verdict(5, ok,
            fmt("sharding equivalence: max |sharded - monolithic| %.3e <= 1e-12 over "
                "K in {1,2,4,8}, both losses, 64-pair batch",
                max_diff));
    return ok;
}

// Criterion 6: uniform similarities give loss ln N to 1e-12; well-separated
// diagonal similarities at tau=0.02 give per-row loss below 1e-20.
bool criterion_6() {
    const hwcl::LossConfig config = loss_config(hwcl::LossVariant::InfoNCE, 0.0);
    double max_uniform_err = 0.0;
    for (const std::size_t n : {std::size_t{4}, std::size_t{7}, std::size_t{64}}) {
        hwcl::SimilarityMatrix sim;
        sim.values = hwcl::Matrix(n, n, 0.37);
        std::vector<std::size_t> positives(n);
        for (std::size_t i = 0; i < n; ++i) positives[i] = i;
        const hwcl::LossResult result = hwcl::infonce(sim, positives, config);
        const double expected = std::log(static_cast<double>(n));
        max_uniform_err = std::max(max_uniform_err, std::fabs(result.loss - expected));
        for (const double row : result.per_row_loss) {
            max_uniform_err = std::max(max_uniform_err, std::fabs(row - expected));
        }
    }

    hwcl::SimilarityMatrix diag;
    diag.values = hwcl::Matrix(4, 4, 0.0);
    std::vector<std::size_t> positives(4);
    for (std::size_t i = 0; i < 4; ++i) {
        diag.values(i, i) = 1.0;
        positives[i] = i;
    }
    const hwcl::LossResult separated = hwcl::infonce(diag, positives, config);
    bool diag_ok = true;
    for (const double row : separated.per_row_loss) diag_ok = diag_ok && row > 0.0 && row < 1e-20;

    const bool ok = max_uniform_err <= 1e-12 && diag_ok;
    verdict(6, ok,
            fmt("closed forms: uniform-row |loss - ln N| max %.3e <= 1e-12 (N=4,7,64), "
                "diagonal per-row loss %.3e in (0, 1e-20)",
                max_uniform_err, separated.per_row_loss[0]));
    return ok;
}

struct BenchmarkMeans {
    double nce_gap = 0.0;
    double nce_p1 = 0.0;
    double hw9_gap = 0.0;
    std::vector<double> alpha_values = {0.0, 3.0, 6.0, 9.0, 12.0};
    std::vector<double> alpha_p1; // mean precision@1 per alpha, same order
    double elapsed = 0.0;
};

// One experiment per seed trains all six variants (plain + five alphas) from
// identical initialization on identical batches; means aggregate 5 seeds.
BenchmarkMeans run_benchmark() {
    const auto start = Clock::now();
    BenchmarkMeans means;
    means.alpha_p1.assign(means.alpha_values.size(), 0.0);

    std::vector<hwcl::LossVariantSpec> variants;
    variants.push_back({"infonce", loss_config(hwcl::LossVariant::InfoNCE, 0.0)});
    for (const double alpha : means.alpha_values) {
        variants.push_back({"hw" + std::to_string(static_cast<int>(alpha)),
                            loss_config(hwcl::LossVariant::HardnessWeighted, alpha)});
    }

    const int n_seeds = 5;
    for (int seed = 1; seed <= n_seeds; ++seed) {
        hwcl::SyntheticSpec spec; // benchmark shape: 8 clusters x 16 pairs, d_in 12
        spec.seed = static_cast<std::uint64_t>(seed);
        hwcl::ExperimentConfig config; // 500 steps, batch 64, tau 0.02 defaults
        config.train.seed = static_cast<std::uint64_t>(seed);

        const std::vector<hwcl::ExperimentResult> results =
            hwcl::run_experiment(spec, config, variants);
        means.nce_gap += results[0].report.hard_gap;
        means.nce_p1 += results[0].precision_at_1;
        for (std::size_t a = 0; a < means.alpha_values.size(); ++a) {
            means.alpha_p1[a] += results[a + 1].precision_at_1;
            if (means.alpha_values[a] == 9.0) means.hw9_gap += results[a + 1].report.hard_gap;
        }
    }
    means.nce_gap /= n_seeds;
    means.nce_p1 /= n_seeds;
    means.hw9_gap /= n_seeds;
    for (double& v : means.alpha_p1) v /= n_seeds;
    means.elapsed = seconds_since(start);
    return means;
}

// Criterion 7: on the 5-seed benchmark the alpha=9 run's mean hard_gap is at
// least as negative as InfoNCE's plus 0.02 slack, and its mean precision@1 is
// at least InfoNCE's, inside 5 minutes.
bool criterion_7(const BenchmarkMeans& means) {
    const double hw9_p1 = means.alpha_p1[3];
    const bool gap_ok = means.hw9_gap <= means.nce_gap + 0.02;
    const bool p1_ok = hw9_p1 >= means.nce_p1;
    const bool time_ok = means.elapsed < 300.0;
    const bool ok = gap_ok && p1_ok && time_ok;
    verdict(7, ok,
            fmt("trend: mean hard_gap hw9 %+.4f vs infonce %+.4f (slack 0.02), mean p@1 "
                "%.4f vs %.4f, 5 seeds in %.1f s < 300 s",
                means.hw9_gap, means.nce_gap, hw9_p1, means.nce_p1, means.elapsed));
    return ok;
}

// Criterion 8: every alpha > 0 mean precision@1 is at least the alpha=0 mean.
bool criterion_8(const BenchmarkMeans& means) {
    const double baseline = means.alpha_p1[0];
    bool ok = true;
    for (std::size_t a = 1; a < means.alpha_values.size(); ++a) {
        ok = ok && means.alpha_p1[a] >= baseline;
    }
    verdict(8, ok,
            fmt("alpha sweep: mean p@1 by alpha {0,3,6,9,12} = "
                "{%.4f, %.4f, %.4f, %.4f, %.4f}, every alpha>0 >= alpha=0",
                means.alpha_p1[0], means.alpha_p1[1], means.alpha_p1[2], means.alpha_p1[3],
                means.alpha_p1[4]));
    return ok;
}

// Criterion 9: finite differences over every tower parameter agree with the
// analytic parameter gradients, max relative error < 1e-3.
bool criterion_9() {
    hwcl::GradCheckOptions opts;
    opts.tolerance = 1e-3;
    opts.floor = 1e-5;
    double max_rel = 0.0;
    std::size_t entries = 0;
    for (const std::uint64_t seed : {3ull, 4ull}) {
        for (const hwcl::LossVariant variant :
             {hwcl::LossVariant::InfoNCE, hwcl::LossVariant::HardnessWeighted}) {
            const hwcl::GradCheckReport r =
                hwcl::check_encoder_gradient(seed, loss_config(variant, 9.0), opts);
            max_rel = std::max(max_rel, r.max_rel_error);
            entries += r.entries_checked;
        }
    }
    const bool ok = max_rel < 1e-3;
    verdict(9, ok,
            fmt("encoder parameter gradients: max_rel %.3e < 1e-3 over %zu parameters "
                "(2 seeds x 2 losses)",
                max_rel, entries));
    return ok;
}

// Criterion 10: two identical CLI train runs produce byte-identical
// metrics.json (wall clock lives in timings.json, which may differ).
bool criterion_10(const std::string& cli) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "hwcl_acceptance_c10";
    std::error_code ec;
    fs::remove_all(dir, ec);
    fs::create_directories(dir);

    hwcl::write_text_file((dir / "spec.json").string(),
                          R"({"n_clusters": 4, "pairs_per_cluster": 8, "d_in": 8, "seed": 7})");
    hwcl::write_text_file((dir / "config.json").string(),
                          R"({"train": {"steps": 60, "batch_size": 16, "seed": 3,
                              "variant": "hardness_weighted", "alpha": 9.0},
                              "d_hidden": 16, "d_emb": 8, "eval_k": 3, "histogram_bins": 20})");

    const auto run = [&](const std::string& args) {
        const std::string cmd = "\"" + cli + "\" " + args + " > /dev/null";
        return std::system(cmd.c_str());
    };
    const std::string spec = (dir / "spec.json").string();
    const std::string data = (dir / "data.json").string();
    const std::string config = (dir / "config.json").string();

    int status = run("gen-data --spec \"" + spec + "\" --out \"" + data + "\"");
    for (const char* out : {"run1", "run2"}) {
        if (status != 0) break;
        status = run("train --config \"" + config + "\" --data \"" + data + "\" --out \"" +
                     (dir / out).string() + "\"");
    }

    bool identical = false;
    if (status == 0) {
        const std::string first = hwcl::read_text_file((dir / "run1" / "metrics.json").string());
        const std::string second = hwcl::read_text_file((dir / "run2" / "metrics.json").string());
        identical = !first.empty() && first == second;
    }
    const bool ok = status == 0 && identical;
    verdict(10, ok,
            fmt("CLI determinism: repeated train runs -> metrics.json %s (exit status %d)",
                identical ? "byte-identical" : "DIFFER", status));
    fs::remove_all(dir, ec);
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <path-to-cli-binary>\n", argv[0]);
        return 2;
    }
    const std::string cli = argv[1];

    int failures = 0;
    const auto tally = [&failures](bool ok) { failures += ok ? 0 : 1; };

    tally(criterion_1());
    tally(criterion_2());
    tally(criterion_3());
    tally(criterion_4());
    tally(criterion_5());
    tally(criterion_6());
    const BenchmarkMeans means = run_benchmark();
    tally(criterion_7(means));
    tally(criterion_8(means));
    tally(criterion_9());
    tally(criterion_10(cli));

    std::printf("%d/10 criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
