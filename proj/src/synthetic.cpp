#include "hwcl/synthetic.hpp"

#include <cmath>
#include <random>

#include "hwcl/error.hpp"

namespace hwcl {

void SyntheticSpec::validate() const {
    if (n_clusters < 2) throw Error(ErrorCode::InvalidSpec, "need at least 2 clusters");
    if (pairs_per_cluster < 2) {
        throw Error(ErrorCode::InvalidSpec, "need at least 2 pairs per cluster for hard negatives");
    }
    if (d_in < 2) throw Error(ErrorCode::InvalidSpec, "d_in must be >= 2");
    // Zero is allowed: the noiseless degenerate collapses each cluster to one
    // point, which downstream checks rely on.
    if (intra_cluster_noise < 0.0 || !std::isfinite(intra_cluster_noise)) {
        throw Error(ErrorCode::InvalidSpec, "intra_cluster_noise must be >= 0");
    }
    if (query_target_noise < 0.0 || !std::isfinite(query_target_noise)) {
        throw Error(ErrorCode::InvalidSpec, "query_target_noise must be >= 0");
    }
}

PairDataset generate_dataset(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    PairDataset data;
    data.d_in = spec.d_in;
    data.pairs.reserve(spec.n_clusters * spec.pairs_per_cluster);

    std::vector<double> center(spec.d_in);
    std::vector<double> anchor(spec.d_in);
    for (std::size_t c = 0; c < spec.n_clusters; ++c) {
        for (double& x : center) x = unit(rng);
        for (std::size_t p = 0; p < spec.pairs_per_cluster; ++p) {
            for (std::size_t k = 0; k < spec.d_in; ++k) {
                anchor[k] = center[k] + spec.intra_cluster_noise * unit(rng);
            }
            PairSample sample;
            sample.cluster = static_cast<int>(c);
            sample.query.resize(spec.d_in);
            sample.target.resize(spec.d_in);
            for (std::size_t k = 0; k < spec.d_in; ++k) {
                sample.query[k] = anchor[k] + spec.query_target_noise * unit(rng);
            }
            for (std::size_t k = 0; k < spec.d_in; ++k) {
                sample.target[k] = anchor[k] + spec.query_target_noise * unit(rng);
            }
            data.pairs.push_back(std::move(sample));
        }
    }
    return data;
}

TrainEvalSplit split_dataset(const PairDataset& data, double eval_fraction) {
    if (!(eval_fraction > 0.0) || !(eval_fraction < 1.0)) {
        throw Error(ErrorCode::InvalidSpec, "eval_fraction must be in (0, 1)");
    }
    if (data.pairs.empty()) throw Error(ErrorCode::InvalidSpec, "empty dataset");

    // Pairs arrive grouped by cluster in generation order; take the tail of
    // each cluster run for eval so both splits cover every cluster.
    TrainEvalSplit split;
    split.train.d_in = data.d_in;
    split.eval.d_in = data.d_in;

    std::size_t run_begin = 0;
    while (run_begin < data.pairs.size()) {
        std::size_t run_end = run_begin;
        while (run_end < data.pairs.size() &&
               data.pairs[run_end].cluster == data.pairs[run_begin].cluster) {
            ++run_end;
        }
        const std::size_t run = run_end - run_begin;
        std::size_t eval_count = static_cast<std::size_t>(
            std::ceil(eval_fraction * static_cast<double>(run)));
        if (eval_count >= run) eval_count = run - 1;
        const std::size_t eval_begin = run_end - eval_count;
        for (std::size_t i = run_begin; i < eval_begin; ++i) split.train.pairs.push_back(data.pairs[i]);
        for (std::size_t i = eval_begin; i < run_end; ++i) split.eval.pairs.push_back(data.pairs[i]);
        run_begin = run_end;
    }
    if (split.train.pairs.empty() || split.eval.pairs.empty()) {
        throw Error(ErrorCode::InvalidSpec, "split left one side empty");
    }
    return split;
}

} // namespace hwcl
