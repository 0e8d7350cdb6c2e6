#include "hwcl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "hwcl/error.hpp"
#include "hwcl/hashing.hpp"
#include "hwcl/io.hpp"

namespace hwcl {

namespace {

std::string spec_tag(const SyntheticSpec& spec) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "spec|" << spec.n_clusters << '|' << spec.pairs_per_cluster << '|' << spec.d_in << '|'
        << spec.intra_cluster_noise << '|' << spec.query_target_noise << '|' << spec.seed;
    return out.str();
}

std::string fingerprint_of(const std::string& data_tag, const ExperimentConfig& config,
                           const std::string& label) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << data_tag;
    const TrainConfig& t = config.train;
    out << "|train|" << t.learning_rate << '|' << t.steps << '|' << t.batch_size << '|' << t.seed
        << '|' << t.loss.tau << '|' << t.loss.alpha << '|' << loss_variant_name(t.loss.variant)
        << '|' << t.shards << '|' << t.freeze_query_tower << '|' << t.freeze_target_tower;
    out << "|model|" << config.d_hidden << '|' << config.d_emb << '|' << config.shared_towers;
    out << "|eval|" << config.eval_fraction << '|' << config.eval_k << '|' << config.histogram_bins;
    out << "|label|" << label;
    return to_hex(fnv1a(out.str()));
}

} // namespace

std::string config_fingerprint(const SyntheticSpec& spec, const ExperimentConfig& config,
                               const std::string& label) {
    return fingerprint_of(spec_tag(spec), config, label);
}

namespace {

struct EvalBatch {
    Matrix queries;
    Matrix targets;
};

EvalBatch eval_features(const PairDataset& eval) {
    std::vector<std::size_t> all(eval.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const RawPairBatch raw = select_pairs(eval, all);
    return EvalBatch{raw.queries, raw.targets};
}

} // namespace

std::vector<ExperimentResult> run_variants(const PairDataset& data, const ExperimentConfig& config,
                                           const std::vector<LossVariantSpec>& variants,
                                           const std::string& data_tag,
                                           std::vector<PolicyState>* states_out) {
    if (variants.empty()) throw Error(ErrorCode::InvalidSpec, "no loss variants requested");
    const TrainEvalSplit split = split_dataset(data, config.eval_fraction);
    const EvalBatch eval = eval_features(split.eval);

    if (states_out) states_out->clear();
    std::vector<ExperimentResult> results;
    results.reserve(variants.size());
    for (const LossVariantSpec& variant : variants) {
        TrainConfig train_config = config.train;
        train_config.loss = variant.loss;

        // Same seed for every variant: identical init and identical batch
        // schedule, so outcome differences are attributable to the loss.
        PolicyState state = init_policy(data.d_in, config.d_hidden, config.d_emb,
                                        config.shared_towers, train_config.seed);

        const auto t0 = std::chrono::steady_clock::now();
        const TrainTrace trace = train(state, split.train, train_config);
        const auto t1 = std::chrono::steady_clock::now();

        EmbeddingBatch eval_batch = make_in_batch(encode(state.query_tower, eval.queries),
                                                  encode(state.target(), eval.targets));
        const SimilarityMatrix sim = cosine_matrix(eval_batch);

        ExperimentResult result;
        result.label = variant.label;
        result.fingerprint = fingerprint_of(data_tag, config, variant.label);
        result.first_batch_fingerprint = trace.first_batch_fingerprint;
        result.loss_trace = trace.loss_per_step;
        result.report = gap_report(sim, eval_batch.positive_index, config.eval_k);
        result.precision_at_1 = result.report.precision_at_1;
        result.wall_seconds = std::chrono::duration<double>(t1 - t0).count();

        // Cosines can land an ulp outside [-1, 1]; clamp before binning so
        // the strict histogram range check stays meaningful for real outliers.
        SimilarityMatrix clamped = sim;
        for (double& v : clamped.values.data) v = std::clamp(v, -1.0, 1.0);
        const NegativeClasses classes =
            classify_negatives(clamped, eval_batch.positive_index, config.eval_k);
        result.histogram = histogram(clamped, eval_batch.positive_index, classes,
                                     uniform_bin_edges(-1.0, 1.0, config.histogram_bins));

        results.push_back(std::move(result));
        if (states_out) states_out->push_back(std::move(state));
    }
    return results;
}

std::vector<ExperimentResult> run_experiment(const SyntheticSpec& spec,
                                             const ExperimentConfig& config,
                                             const std::vector<LossVariantSpec>& variants) {
    return run_variants(generate_dataset(spec), config, variants, spec_tag(spec));
}

namespace {

nlohmann::json result_to_json(const ExperimentResult& r) {
    nlohmann::json j;
    j["label"] = r.label;
    j["fingerprint"] = r.fingerprint;
    j["first_batch_fingerprint"] = r.first_batch_fingerprint;
    j["loss_trace"] = r.loss_trace;
    j["precision_at_1"] = r.precision_at_1;
    j["gap_report"] = nlohmann::json::parse(gap_report_to_json(r.report));
    j["histogram"] = nlohmann::json::parse(histogram_to_json(r.histogram));
    return j;
}

} // namespace

std::string results_to_metrics_json(const std::vector<ExperimentResult>& results) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["results"] = nlohmann::json::array();
    for (const ExperimentResult& r : results) j["results"].push_back(result_to_json(r));
    return j.dump(2) + "\n";
}

namespace {

std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string mean_with_gap(double mean, double gap) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.4f(%+.4f)", mean, gap);
    return buf;
}

} // namespace

// Four metric rows, one column per variant; negative rows carry their gap
// against the positives in parentheses.
std::string results_to_gap_csv(const std::vector<ExperimentResult>& results) {
    std::ostringstream out;
    out << "metric";
    for (const ExperimentResult& r : results) out << ',' << r.label;
    out << '\n';

    out << "Positive";
    for (const ExperimentResult& r : results) out << ',' << fixed4(r.report.mean_positive);
    out << '\n';
    out << "Hard Negative";
    for (const ExperimentResult& r : results) {
        out << ',' << mean_with_gap(r.report.mean_hard_negative, r.report.hard_gap);
    }
    out << '\n';
    out << "Easy Negative";
    for (const ExperimentResult& r : results) {
        out << ',' << mean_with_gap(r.report.mean_easy_negative, r.report.easy_gap);
    }
    out << '\n';
    out << "Precision@1";
    for (const ExperimentResult& r : results) out << ',' << fixed4(r.report.precision_at_1);
    out << '\n';
    return out.str();
}

void emit_report(const std::vector<ExperimentResult>& results, const std::string& out_dir) {
    if (results.empty()) throw Error(ErrorCode::InvalidSpec, "no results to report");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir + ": " + ec.message());

    const std::filesystem::path dir(out_dir);
    write_text_file((dir / "metrics.json").string(), results_to_metrics_json(results));
    write_text_file((dir / "gap_report.csv").string(), results_to_gap_csv(results));

    nlohmann::json hists;
    hists["schema_version"] = 1;
    for (const ExperimentResult& r : results) {
        hists["histograms"][r.label] = nlohmann::json::parse(histogram_to_json(r.histogram));
    }
    write_text_file((dir / "histograms.json").string(), hists.dump(2) + "\n");

    nlohmann::json times;
    times["schema_version"] = 1;
    for (const ExperimentResult& r : results) times["wall_seconds"][r.label] = r.wall_seconds;
    write_text_file((dir / "timings.json").string(), times.dump(2) + "\n");
}

} // namespace hwcl
