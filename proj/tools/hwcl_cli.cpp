#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hwcl/analysis.hpp"
#include "hwcl/embedding.hpp"
#include "hwcl/error.hpp"
#include "hwcl/experiment.hpp"
#include "hwcl/gradcheck.hpp"
#include "hwcl/hashing.hpp"
#include "hwcl/io.hpp"
#include "hwcl/synthetic.hpp"

namespace {

int cmd_gen_data(const std::string& spec_path, const std::string& out_path) {
    const hwcl::SyntheticSpec spec = hwcl::load_synthetic_spec(spec_path);
    const hwcl::PairDataset data = hwcl::generate_dataset(spec);
    hwcl::save_dataset(data, spec, out_path);
    std::printf("wrote %zu pairs (%zu clusters x %zu, d_in=%zu) to %s\n", data.size(),
                spec.n_clusters, spec.pairs_per_cluster, spec.d_in, out_path.c_str());
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir) {
    const hwcl::ExperimentConfig config = hwcl::load_experiment_config(config_path);
    const hwcl::PairDataset data = hwcl::load_dataset(data_path);
    const std::string data_tag = "data|" + hwcl::to_hex(hwcl::fnv1a(hwcl::read_text_file(data_path)));

    const std::string label = hwcl::loss_variant_name(config.train.loss.variant);
    std::vector<hwcl::PolicyState> states;
    const std::vector<hwcl::ExperimentResult> results = hwcl::run_variants(
        data, config, {hwcl::LossVariantSpec{label, config.train.loss}}, data_tag, &states);

    hwcl::emit_report(results, out_dir);
    const std::filesystem::path checkpoint = std::filesystem::path(out_dir) / "checkpoint.json";
    hwcl::save_checkpoint(states.front(), results.front().fingerprint, checkpoint.string());

    const hwcl::ExperimentResult& r = results.front();
    std::printf("%s: final_loss=%.6f precision@1=%.4f hard_gap=%+.4f easy_gap=%+.4f (%s)\n",
                r.label.c_str(), r.loss_trace.back(), r.precision_at_1, r.report.hard_gap,
                r.report.easy_gap, out_dir.c_str());
    return 0;
}

int cmd_grad_check(std::uint64_t seed) {
    bool all_ok = true;
    const auto line = [&all_ok](const char* name, const hwcl::GradCheckReport& r, bool want_pass) {
        const bool ok = r.passed == want_pass;
        all_ok = all_ok && ok;
        std::printf("%-34s max_rel=%.3e entries=%zu %s\n", name, r.max_rel_error,
                    r.entries_checked, ok ? "PASS" : "FAIL");
    };

    hwcl::GradCheckOptions sim_opts; // step 1e-6, tol 1e-4, floor 1e-3
    constexpr int kInstances = 10;

    for (const double alpha : {0.0, 3.0, 9.0}) {
        hwcl::GradCheckReport worst;
        worst.passed = true;
        for (int k = 0; k < kInstances; ++k) {
            const std::uint64_t s = seed * 1000 + static_cast<std::uint64_t>(k);
            std::vector<std::size_t> positives;
            const std::size_t n = 4 + s % 9;
            const std::size_t m = 4 + (s / 9) % 9;
            const hwcl::SimilarityMatrix sim = hwcl::random_similarity(n, m, s, positives);
            hwcl::LossConfig config;
            config.variant = alpha == 0.0 ? hwcl::LossVariant::InfoNCE
                                          : hwcl::LossVariant::HardnessWeighted;
            config.alpha = alpha;
            const hwcl::GradCheckReport r = hwcl::check_loss_gradient(sim, positives, config, sim_opts);
            worst.max_rel_error = std::max(worst.max_rel_error, r.max_rel_error);
            worst.entries_checked += r.entries_checked;
            worst.passed = worst.passed && r.passed;
        }
        char name[64];
        std::snprintf(name, sizeof(name), "loss-gradient alpha=%g", alpha);
        line(name, worst, true);
    }

    {
        // Recomputing the reward during FD must break agreement; this is the
        // stop-gradient made observable.
        hwcl::GradCheckReport worst;
        worst.passed = false;
        double min_rel = 1e300;
        for (int k = 0; k < kInstances; ++k) {
            const std::uint64_t s = seed * 1000 + static_cast<std::uint64_t>(k);
            std::vector<std::size_t> positives;
            const hwcl::SimilarityMatrix sim =
                hwcl::random_similarity(4 + s % 9, 4 + (s / 9) % 9, s, positives);
            hwcl::LossConfig config;
            config.variant = hwcl::LossVariant::HardnessWeighted;
            config.alpha = 9.0;
            const hwcl::GradCheckReport r =
                hwcl::check_loss_gradient_reward_recomputed(sim, positives, config, sim_opts);
            min_rel = std::min(min_rel, r.max_rel_error);
            worst.max_rel_error = std::max(worst.max_rel_error, r.max_rel_error);
            worst.entries_checked += r.entries_checked;
        }
        const bool disagrees = min_rel > 10.0 * sim_opts.tolerance;
        all_ok = all_ok && disagrees;
        std::printf("%-34s min_rel=%.3e entries=%zu %s\n", "stop-gradient discriminator", min_rel,
                    worst.entries_checked, disagrees ? "PASS" : "FAIL");
    }

    hwcl::GradCheckOptions param_opts;
    param_opts.tolerance = 1e-3;
    param_opts.floor = 1e-5;
    for (const bool weighted : {false, true}) {
        hwcl::LossConfig config;
        config.variant = weighted ? hwcl::LossVariant::HardnessWeighted : hwcl::LossVariant::InfoNCE;
        const hwcl::GradCheckReport r = hwcl::check_encoder_gradient(seed, config, param_opts);
        line(weighted ? "encoder-gradient hardness_weighted" : "encoder-gradient infonce", r, true);
    }

    return all_ok ? 0 : 1;
}

int cmd_analyze(const std::string& embeddings_path, std::size_t k, std::size_t bins,
                const std::string& out_dir) {
    const hwcl::EmbeddingBatch batch = hwcl::load_embeddings(embeddings_path);
    hwcl::SimilarityMatrix sim = hwcl::cosine_matrix(batch);
    const hwcl::SimilarityGapReport report = hwcl::gap_report(sim, batch.positive_index, k);

    for (double& v : sim.values.data) v = std::clamp(v, -1.0, 1.0);
    const hwcl::NegativeClasses classes = hwcl::classify_negatives(sim, batch.positive_index, k);
    const hwcl::HistogramSpec hist = hwcl::histogram(sim, batch.positive_index, classes,
                                                     hwcl::uniform_bin_edges(-1.0, 1.0, bins));

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw hwcl::Error(hwcl::ErrorCode::IoError, "cannot create " + out_dir);
    const std::filesystem::path dir(out_dir);
    hwcl::write_text_file((dir / "gap_report.json").string(), hwcl::gap_report_to_json(report) + "\n");
    hwcl::write_text_file((dir / "histogram.json").string(), hwcl::histogram_to_json(hist) + "\n");

    std::printf("queries=%zu k=%zu positive=%.4f hard=%.4f(%+.4f) easy=%.4f(%+.4f) p@1=%.4f\n",
                report.n_queries, report.k_hard, report.mean_positive, report.mean_hard_negative,
                report.hard_gap, report.mean_easy_negative, report.easy_gap, report.precision_at_1);
    return 0;
}

int cmd_sweep(const std::string& param, const std::vector<double>& values,
              const std::string& spec_path, const std::string& config_path,
              const std::string& out_dir) {
    if (values.empty()) throw hwcl::Error(hwcl::ErrorCode::InvalidSpec, "no sweep values");
    const hwcl::SyntheticSpec spec =
        spec_path.empty() ? hwcl::SyntheticSpec{} : hwcl::load_synthetic_spec(spec_path);
    const hwcl::ExperimentConfig base =
        config_path.empty() ? hwcl::ExperimentConfig{} : hwcl::load_experiment_config(config_path);

    std::vector<hwcl::ExperimentResult> results;
    if (param == "alpha") {
        // One paired run: every alpha sees identical init and batches.
        std::vector<hwcl::LossVariantSpec> variants;
        for (const double v : values) {
            if (v < 0.0) throw hwcl::Error(hwcl::ErrorCode::InvalidSpec, "alpha must be >= 0");
            hwcl::LossConfig loss = base.train.loss;
            loss.variant = hwcl::LossVariant::HardnessWeighted;
            loss.alpha = v;
            char label[32];
            std::snprintf(label, sizeof(label), "alpha_%g", v);
            variants.push_back(hwcl::LossVariantSpec{label, loss});
        }
        results = hwcl::run_experiment(spec, base, variants);
    } else if (param == "shards" || param == "batch_size") {
        for (const double v : values) {
            const auto iv = static_cast<long long>(v);
            if (static_cast<double>(iv) != v || iv < 1) {
                throw hwcl::Error(hwcl::ErrorCode::InvalidSpec, param + " values must be positive integers");
            }
            hwcl::ExperimentConfig config = base;
            if (param == "shards") {
                config.train.shards = static_cast<int>(iv);
            } else {
                config.train.batch_size = static_cast<std::size_t>(iv);
            }
            char label[32];
            std::snprintf(label, sizeof(label), "%s_%lld", param == "shards" ? "shards" : "batch", iv);
            const hwcl::LossVariantSpec variant{label, config.train.loss};
            std::vector<hwcl::ExperimentResult> one = hwcl::run_experiment(spec, config, {variant});
            results.push_back(std::move(one.front()));
        }
    } else {
        throw hwcl::Error(hwcl::ErrorCode::InvalidSpec,
                          "unknown sweep param '" + param + "' (alpha, shards, batch_size)");
    }

    hwcl::emit_report(results, out_dir);
    for (const hwcl::ExperimentResult& r : results) {
        std::printf("%-12s final_loss=%.6f precision@1=%.4f hard_gap=%+.4f\n", r.label.c_str(),
                    r.loss_trace.back(), r.precision_at_1, r.report.hard_gap);
    }
    return 0;
}

int cmd_report(const std::string& runs_dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(runs_dir)) {
        throw hwcl::Error(hwcl::ErrorCode::IoError, runs_dir + " is not a directory");
    }

    std::vector<fs::path> metric_files;
    if (fs::exists(fs::path(runs_dir) / "metrics.json")) {
        metric_files.push_back(fs::path(runs_dir) / "metrics.json");
    }
    for (const auto& entry : fs::directory_iterator(runs_dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "metrics.json")) {
            metric_files.push_back(entry.path() / "metrics.json");
        }
    }
    std::sort(metric_files.begin(), metric_files.end());
    if (metric_files.empty()) {
        throw hwcl::Error(hwcl::ErrorCode::InvalidSpec, "no metrics.json under " + runs_dir);
    }

    std::printf("%-24s %-16s %12s %12s %12s %12s\n", "run", "label", "final_loss", "p@1",
                "hard_gap", "easy_gap");
    for (const fs::path& file : metric_files) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(hwcl::read_text_file(file.string()));
        } catch (const nlohmann::json::parse_error& e) {
            throw hwcl::Error(hwcl::ErrorCode::InvalidSpec, file.string() + ": " + e.what());
        }
        const std::string run = file.parent_path().filename().string();
        for (const auto& r : j.at("results")) {
            const auto& gap = r.at("gap_report");
            const auto& trace = r.at("loss_trace");
            std::printf("%-24s %-16s %12.6f %12.4f %+12.4f %+12.4f\n", run.c_str(),
                        r.at("label").get<std::string>().c_str(),
                        trace.empty() ? 0.0 : trace.back().get<double>(),
                        r.at("precision_at_1").get<double>(),
                        gap.at("hard_gap").get<double>(), gap.at("easy_gap").get<double>());
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hardness-weighted contrastive learning workbench"};
    app.require_subcommand(1);

    std::string spec_path;
    std::string out_path;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic pair dataset");
    gen->add_option("--spec", spec_path, "synthetic spec JSON")->required();
    gen->add_option("--out", out_path, "output dataset path")->required();

    std::string config_path;
    std::string data_path;
    std::string train_out;
    auto* train = app.add_subcommand("train", "train one encoder and emit reports");
    train->add_option("--config", config_path, "experiment config JSON")->required();
    train->add_option("--data", data_path, "dataset file from gen-data")->required();
    train->add_option("--out", train_out, "output directory")->required();

    std::uint64_t seed = 1;
    auto* grad = app.add_subcommand("grad-check", "finite-difference gradient verification");
    grad->add_option("--seed", seed, "instance seed");

    std::string embeddings_path;
    std::size_t k = 5;
    std::size_t bins = 40;
    std::string analyze_out;
    auto* analyze = app.add_subcommand("analyze", "similarity-gap report for stored embeddings");
    analyze->add_option("--embeddings", embeddings_path, "embeddings JSON")->required();
    analyze->add_option("--k", k, "hard/easy negatives per query");
    analyze->add_option("--bins", bins, "histogram bin count");
    analyze->add_option("--out", analyze_out, "output directory")->required();

    std::string sweep_param;
    std::vector<double> sweep_values;
    std::string sweep_spec;
    std::string sweep_config;
    std::string sweep_out = "sweep_out";
    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    sweep->add_option("--param", sweep_param, "alpha | shards | batch_size")->required();
    sweep->add_option("--values", sweep_values, "comma-separated values")
        ->required()
        ->delimiter(',');
    sweep->add_option("--spec", sweep_spec, "synthetic spec JSON (default: built-in benchmark)");
    sweep->add_option("--config", sweep_config, "experiment config JSON (default: built-in)");
    sweep->add_option("--out", sweep_out, "output directory");

    std::string runs_dir;
    auto* report = app.add_subcommand("report", "summarize metrics from run directories");
    report->add_option("--runs", runs_dir, "directory holding run outputs")->required();

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_gen_data(spec_path, out_path);
        if (train->parsed()) return cmd_train(config_path, data_path, train_out);
        if (grad->parsed()) return cmd_grad_check(seed);
        if (analyze->parsed()) return cmd_analyze(embeddings_path, k, bins, analyze_out);
        if (sweep->parsed()) return cmd_sweep(sweep_param, sweep_values, sweep_spec, sweep_config, sweep_out);
        if (report->parsed()) return cmd_report(runs_dir);
        return 1;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const hwcl::Error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", hwcl::error_code_name(e.code()), e.what());
        return e.code() == hwcl::ErrorCode::NonFiniteGradient ? 2 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
