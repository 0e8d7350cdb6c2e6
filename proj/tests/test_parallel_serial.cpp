#include <doctest.h>

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "hwcl/embedding.hpp"
#include "hwcl/encoder.hpp"
#include "hwcl/loss.hpp"
#include "hwcl/serial_ref.hpp"

#include "support.hpp"

namespace {

struct Shape {
    std::size_t n;
    std::size_t m;
};

// Odd sizes on purpose: they leave ragged OpenMP chunks.
const Shape kShapes[] = {{1, 2}, {3, 5}, {16, 16}, {33, 7}};
const std::uint64_t kSeeds[] = {11, 12, 13};

hwcl::EmbeddingBatch batch_for(const Shape& shape, std::uint64_t seed) {
    hwcl::EmbeddingBatch batch;
    batch.queries = support::random_matrix(shape.n, 6, seed);
    batch.targets = support::random_matrix(shape.m, 6, seed + 1);
    batch.positive_index.resize(shape.n);
    for (std::size_t i = 0; i < shape.n; ++i) batch.positive_index[i] = i % shape.m;
    return batch;
}

void check_loss_equal(const hwcl::LossResult& a, const hwcl::LossResult& b) {
    CHECK(a.loss == b.loss);
    CHECK(a.per_row_loss == b.per_row_loss);
    CHECK(a.normalizers == b.normalizers);
    CHECK(a.grad_wrt_sim.data == b.grad_wrt_sim.data);
    CHECK(a.reward_matrix.data == b.reward_matrix.data);
    CHECK(a.policy_logits.data == b.policy_logits.data);
    CHECK(a.positives == b.positives);
}

} // namespace

TEST_CASE("parallel cosine_matrix is bitwise equal to the serial reference") {
    for (const Shape& shape : kShapes) {
        for (std::uint64_t seed : kSeeds) {
            const hwcl::EmbeddingBatch batch = batch_for(shape, seed);
            const hwcl::SimilarityMatrix par = hwcl::cosine_matrix(batch);
            const hwcl::SimilarityMatrix ser = hwcl::serial::cosine_matrix(batch);
            CHECK(par.values.data == ser.values.data);
        }
    }
}

TEST_CASE("parallel losses are bitwise equal to the serial reference") {
    hwcl::LossConfig nce;
    nce.tau = 0.02;
    nce.variant = hwcl::LossVariant::InfoNCE;
    hwcl::LossConfig hw = nce;
    hw.variant = hwcl::LossVariant::HardnessWeighted;
    hw.alpha = 9.0;

    for (const Shape& shape : kShapes) {
        for (std::uint64_t seed : kSeeds) {
            const hwcl::EmbeddingBatch batch = batch_for(shape, seed);
            const hwcl::SimilarityMatrix sim = hwcl::cosine_matrix(batch);

            check_loss_equal(hwcl::infonce(sim, batch.positive_index, nce),
                             hwcl::serial::infonce(sim, batch.positive_index, nce));

            const hwcl::RewardSpec self = hwcl::RewardSpec::self_similarity();
            check_loss_equal(hwcl::hardness_weighted(sim, batch.positive_index, hw, self),
                             hwcl::serial::hardness_weighted(sim, batch.positive_index, hw, self));

            const hwcl::RewardSpec ext = hwcl::RewardSpec::external(
                support::random_matrix(shape.n, shape.m, seed + 7, 0.5));
            check_loss_equal(hwcl::hardness_weighted(sim, batch.positive_index, hw, ext),
                             hwcl::serial::hardness_weighted(sim, batch.positive_index, hw, ext));
        }
    }
}

TEST_CASE("parallel cosine_backward is bitwise equal to the serial reference") {
    for (const Shape& shape : kShapes) {
        for (std::uint64_t seed : kSeeds) {
            const hwcl::EmbeddingBatch batch = batch_for(shape, seed);
            const hwcl::Matrix upstream = support::random_matrix(shape.n, shape.m, seed + 3);
            const auto par = hwcl::cosine_backward(batch, upstream);
            const auto ser = hwcl::serial::cosine_backward(batch, upstream);
            CHECK(par.first.data == ser.first.data);
            CHECK(par.second.data == ser.second.data);
        }
    }
}

TEST_CASE("parallel encode_raw is bitwise equal to the serial reference") {
    const hwcl::PolicyState state = hwcl::init_policy(5, 7, 4, false, 21);
    for (std::size_t n : {1, 3, 16, 33}) {
        const hwcl::Matrix inputs = support::random_matrix(n, 5, 100 + n);
        const hwcl::Matrix par = hwcl::encode_raw(state.query_tower, inputs);
        const hwcl::Matrix ser = hwcl::serial::encode_raw(state.query_tower, inputs);
        CHECK(par.data == ser.data);
    }
}
