#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hwcl/analysis.hpp"
#include "hwcl/encoder.hpp"
#include "hwcl/synthetic.hpp"

namespace hwcl {

// Everything around one training run that is not the encoder itself: model
// width, eval split, and histogram binning.
struct ExperimentConfig {
    TrainConfig train;
    std::size_t d_hidden = 32;
    std::size_t d_emb = 16;
    bool shared_towers = false;
    double eval_fraction = 0.25;
    std::size_t eval_k = 5; // hard/easy set size for the gap report
    std::size_t histogram_bins = 40;
};

struct LossVariantSpec {
    std::string label;
    LossConfig loss;
};

struct ExperimentResult {
    std::string label;
    std::string fingerprint;             // identifies (seed, train config, data spec)
    std::string first_batch_fingerprint; // equal across variants of one experiment
    std::vector<double> loss_trace;
    SimilarityGapReport report;          // on the held-out eval batch
    HistogramSpec histogram;             // same batch
    double precision_at_1 = 0.0;
    double wall_seconds = 0.0;
};

// Hex fingerprint of (seed, train config, synthetic spec); equal inputs give
// equal fingerprints, any field change gives a different one.
std::string config_fingerprint(const SyntheticSpec& spec, const ExperimentConfig& config,
                               const std::string& label);

// Trains one model per variant from identical initialization and identical
// batch order, then evaluates each on the shared held-out split.
std::vector<ExperimentResult> run_experiment(const SyntheticSpec& spec,
                                             const ExperimentConfig& config,
                                             const std::vector<LossVariantSpec>& variants);

// Same pipeline on an already materialized dataset. data_tag stands in for
// the synthetic spec inside the fingerprint (callers hash the file content).
// states_out, when given, receives the trained policy per variant.
std::vector<ExperimentResult> run_variants(const PairDataset& data, const ExperimentConfig& config,
                                           const std::vector<LossVariantSpec>& variants,
                                           const std::string& data_tag,
                                           std::vector<PolicyState>* states_out = nullptr);

// Writes metrics.json (deterministic), gap_report.csv (one column per
// variant), histograms.json, and timings.json (wall clock, the one
// non-deterministic output, kept out of metrics.json on purpose).
void emit_report(const std::vector<ExperimentResult>& results, const std::string& out_dir);

// Serialization used by emit_report and the CLI.
std::string results_to_metrics_json(const std::vector<ExperimentResult>& results);
std::string results_to_gap_csv(const std::vector<ExperimentResult>& results);

} // namespace hwcl
