#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hwcl/dataset.hpp"
#include "hwcl/loss.hpp"
#include "hwcl/matrix.hpp"

namespace hwcl {

// One tower: affine -> tanh -> affine. The raw output rows are L2-normalized
// at the embedding surface; training differentiates through cosine directly,
// which is scale invariant, so the raw rows carry the gradient.
struct TowerParams {
    Matrix w1;              // d_hidden x d_in
    std::vector<double> b1; // d_hidden
    Matrix w2;              // d_emb x d_hidden
    std::vector<double> b2; // d_emb

    std::size_t d_in() const { return w1.cols; }
    std::size_t d_hidden() const { return w1.rows; }
    std::size_t d_emb() const { return w2.rows; }
};

struct TowerGrads {
    Matrix w1;
    std::vector<double> b1;
    Matrix w2;
    std::vector<double> b2;
};

// The embedding model being optimized. The hardness reward is re-derived
// from the current parameters every step, which keeps the conceptual reward
// snapshot exactly equal to the policy after each update.
struct PolicyState {
    TowerParams query_tower;
    TowerParams target_tower; // ignored when shared_towers is true
    bool shared_towers = false;
    std::int64_t step_count = 0;

    const TowerParams& target() const { return shared_towers ? query_tower : target_tower; }
};

struct TrainConfig {
    double learning_rate = 0.05;
    std::int64_t steps = 500;
    std::size_t batch_size = 64;
    std::uint64_t seed = 1;
    LossConfig loss;
    int shards = 1; // logical devices per step
    bool freeze_query_tower = false;
    bool freeze_target_tower = false;

    void validate() const; // throws InvalidSpec
};

// Dimensions plus seed -> deterministic small random init, biases at zero.
PolicyState init_policy(std::size_t d_in, std::size_t d_hidden, std::size_t d_emb,
                        bool shared_towers, std::uint64_t seed);

// Raw (pre-normalization) tower outputs, n x d_emb.
Matrix encode_raw(const TowerParams& tower, const Matrix& inputs);

// L2-normalized embedding rows. Throws ZeroVector when a raw row underflows.
Matrix encode(const TowerParams& tower, const Matrix& inputs);

struct StepResult {
    LossResult loss;
    double grad_norm = 0.0; // over all updated parameters
};

// One SGD step: forward both towers, loss over config.shards logical devices,
// analytic backward through cosine and the towers, parameter update. Throws
// NonFiniteGradient when any parameter gradient is not finite.
StepResult backprop_step(PolicyState& state, const RawPairBatch& batch, const TrainConfig& config);

struct TrainTrace {
    std::vector<double> loss_per_step;
    std::string first_batch_fingerprint; // hash of the first batch's raw features
};

// Runs config.steps seeded SGD steps over the dataset. Batch order is a
// deterministic function of config.seed only, so two variants trained with
// the same seed see identical data.
TrainTrace train(PolicyState& state, const PairDataset& data, const TrainConfig& config);

// Versioned JSON checkpoint of all tower parameters, step count, and a hash
// of the train config that produced it.
void save_checkpoint(const PolicyState& state, const std::string& config_hash,
                     const std::string& path);
PolicyState load_checkpoint(const std::string& path, std::string* config_hash_out = nullptr);

} // namespace hwcl
