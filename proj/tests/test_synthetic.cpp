#include <doctest.h>

#include <cstddef>
#include <vector>

#include "hwcl/error.hpp"
#include "hwcl/synthetic.hpp"

#include "support.hpp"

using hwcl::ErrorCode;
using hwcl::PairDataset;
using hwcl::SyntheticSpec;

namespace {

SyntheticSpec tiny_spec() {
    SyntheticSpec spec;
    spec.n_clusters = 3;
    spec.pairs_per_cluster = 4;
    spec.d_in = 5;
    spec.seed = 71;
    return spec;
}

} // namespace

TEST_CASE("generation is bitwise deterministic") {
    const PairDataset a = hwcl::generate_dataset(tiny_spec());
    const PairDataset b = hwcl::generate_dataset(tiny_spec());
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.pairs[i].query == b.pairs[i].query);
        CHECK(a.pairs[i].target == b.pairs[i].target);
        CHECK(a.pairs[i].cluster == b.pairs[i].cluster);
    }

    SyntheticSpec other = tiny_spec();
    other.seed = 72;
    const PairDataset c = hwcl::generate_dataset(other);
    CHECK(c.pairs[0].query != a.pairs[0].query);
}

TEST_CASE("generation produces the requested shape") {
    const PairDataset data = hwcl::generate_dataset(tiny_spec());
    CHECK(data.d_in == 5);
    REQUIRE(data.size() == 12);
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(data.pairs[i].cluster == static_cast<int>(i / 4));
        CHECK(data.pairs[i].query.size() == 5);
        CHECK(data.pairs[i].target.size() == 5);
    }
}

TEST_CASE("zero noise collapses each cluster to its center") {
    SyntheticSpec spec = tiny_spec();
    spec.intra_cluster_noise = 0.0;
    spec.query_target_noise = 0.0;
    const PairDataset data = hwcl::generate_dataset(spec);
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(data.pairs[i].query == data.pairs[i].target);
        // Every pair in a cluster is the cluster center itself.
        const std::size_t first = (i / 4) * 4;
        CHECK(data.pairs[i].query == data.pairs[first].query);
    }
    // Distinct clusters still differ.
    CHECK(data.pairs[0].query != data.pairs[4].query);
}

TEST_CASE("pair noise stays smaller than cluster spread") {
    // With the default scales the query/target of one pair sit much closer to
    // each other than to other clusters' members on average.
    SyntheticSpec spec;
    spec.seed = 73;
    const PairDataset data = hwcl::generate_dataset(spec);
    double within = 0.0;
    double across = 0.0;
    std::size_t across_count = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < data.d_in; ++k) {
            const double d = data.pairs[i].query[k] - data.pairs[i].target[k];
            d2 += d * d;
        }
        within += d2;
        const std::size_t j = (i + data.size() / 2) % data.size();
        if (data.pairs[i].cluster != data.pairs[j].cluster) {
            double c2 = 0.0;
            for (std::size_t k = 0; k < data.d_in; ++k) {
                const double d = data.pairs[i].query[k] - data.pairs[j].target[k];
                c2 += d * d;
            }
            across += c2;
            ++across_count;
        }
    }
    REQUIRE(across_count > 0);
    CHECK(within / static_cast<double>(data.size()) <
          across / static_cast<double>(across_count));
}

TEST_CASE("spec validation") {
    SyntheticSpec spec = tiny_spec();
    CHECK_NOTHROW(spec.validate());
    spec.n_clusters = 1;
    CHECK(support::code_of([&] { spec.validate(); }) == ErrorCode::InvalidSpec);
    spec = tiny_spec();
    spec.pairs_per_cluster = 1;
    CHECK(support::code_of([&] { spec.validate(); }) == ErrorCode::InvalidSpec);
    spec = tiny_spec();
    spec.d_in = 1;
    CHECK(support::code_of([&] { spec.validate(); }) == ErrorCode::InvalidSpec);
    spec = tiny_spec();
    spec.intra_cluster_noise = -0.1;
    CHECK(support::code_of([&] { spec.validate(); }) == ErrorCode::InvalidSpec);
    spec = tiny_spec();
    spec.query_target_noise = -1.0;
    CHECK(support::code_of([&] { spec.validate(); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("split keeps every cluster on both sides") {
    SyntheticSpec spec;
    spec.n_clusters = 8;
    spec.pairs_per_cluster = 16;
    spec.d_in = 12;
    spec.seed = 74;
    const PairDataset data = hwcl::generate_dataset(spec);
    const hwcl::TrainEvalSplit split = hwcl::split_dataset(data, 0.25);

    CHECK(split.train.size() == 8 * 12);
    CHECK(split.eval.size() == 8 * 4);
    CHECK(split.train.d_in == 12);
    CHECK(split.eval.d_in == 12);

    std::vector<std::size_t> train_per_cluster(8, 0);
    std::vector<std::size_t> eval_per_cluster(8, 0);
    for (const hwcl::PairSample& p : split.train.pairs) {
        train_per_cluster[static_cast<std::size_t>(p.cluster)]++;
    }
    for (const hwcl::PairSample& p : split.eval.pairs) {
        eval_per_cluster[static_cast<std::size_t>(p.cluster)]++;
    }
    for (std::size_t c = 0; c < 8; ++c) {
        CHECK(train_per_cluster[c] == 12);
        CHECK(eval_per_cluster[c] == 4);
    }

    // The eval side is the tail of each cluster run.
    CHECK(split.eval.pairs[0].query == data.pairs[12].query);
    CHECK(split.train.pairs[0].query == data.pairs[0].query);
}

TEST_CASE("split is deterministic and caps the eval share") {
    const PairDataset data = hwcl::generate_dataset(tiny_spec());
    const hwcl::TrainEvalSplit a = hwcl::split_dataset(data, 0.5);
    const hwcl::TrainEvalSplit b = hwcl::split_dataset(data, 0.5);
    REQUIRE(a.eval.size() == b.eval.size());
    for (std::size_t i = 0; i < a.eval.size(); ++i) {
        CHECK(a.eval.pairs[i].query == b.eval.pairs[i].query);
    }

    // An extreme fraction still leaves one training pair per cluster.
    const hwcl::TrainEvalSplit extreme = hwcl::split_dataset(data, 0.99);
    CHECK(extreme.train.size() == 3);
    CHECK(extreme.eval.size() == 9);
}

TEST_CASE("split rejects degenerate fractions") {
    const PairDataset data = hwcl::generate_dataset(tiny_spec());
    CHECK(support::code_of([&] { hwcl::split_dataset(data, 0.0); }) == ErrorCode::InvalidSpec);
    CHECK(support::code_of([&] { hwcl::split_dataset(data, 1.0); }) == ErrorCode::InvalidSpec);
    CHECK(support::code_of([&] { hwcl::split_dataset(PairDataset{}, 0.5); }) ==
          ErrorCode::InvalidSpec);
}
