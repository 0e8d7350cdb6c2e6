#include "hwcl/encoder.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <string>
#include <utility>

#include <json.hpp>

#include "hwcl/device_sim.hpp"
#include "hwcl/error.hpp"
#include "hwcl/hashing.hpp"
#include "hwcl/io.hpp"

namespace hwcl {

void TrainConfig::validate() const {
    if (!std::isfinite(learning_rate) || learning_rate <= 0.0) {
        throw Error(ErrorCode::InvalidSpec, "learning_rate must be positive");
    }
    if (steps < 1) throw Error(ErrorCode::InvalidSpec, "steps must be >= 1");
    if (batch_size < 2) throw Error(ErrorCode::InvalidSpec, "batch_size must be >= 2");
    if (shards < 1) throw Error(ErrorCode::InvalidSpec, "shards must be >= 1");
    if (batch_size % static_cast<std::size_t>(shards) != 0) {
        throw Error(ErrorCode::InvalidSpec, "batch_size must divide evenly across shards");
    }
    if (batch_size / static_cast<std::size_t>(shards) < 2) {
        throw Error(ErrorCode::InvalidSpec, "each shard needs at least 2 pairs");
    }
    if (loss.variant == LossVariant::BtPairwise) {
        throw Error(ErrorCode::InvalidSpec, "bt_pairwise is not a trainable batch loss");
    }
    if (loss.tau <= 0.0 || !std::isfinite(loss.tau)) {
        throw Error(ErrorCode::InvalidTemperature, "tau must be positive");
    }
    if (loss.alpha < 0.0 || !std::isfinite(loss.alpha)) {
        throw Error(ErrorCode::InvalidSpec, "alpha must be >= 0");
    }
    if (freeze_query_tower && freeze_target_tower) {
        throw Error(ErrorCode::InvalidSpec, "both towers frozen, nothing to train");
    }
}

namespace {

TowerParams random_tower(std::size_t d_in, std::size_t d_hidden, std::size_t d_emb,
                         std::mt19937_64& rng) {
    TowerParams tower;
    tower.w1 = Matrix(d_hidden, d_in);
    tower.b1.assign(d_hidden, 0.0);
    tower.w2 = Matrix(d_emb, d_hidden);
    tower.b2.assign(d_emb, 0.0);
    std::normal_distribution<double> in_scale(0.0, 1.0 / std::sqrt(static_cast<double>(d_in)));
    std::normal_distribution<double> hidden_scale(0.0, 1.0 / std::sqrt(static_cast<double>(d_hidden)));
    for (double& w : tower.w1.data) w = in_scale(rng);
    for (double& w : tower.w2.data) w = hidden_scale(rng);
    return tower;
}

} // namespace

PolicyState init_policy(std::size_t d_in, std::size_t d_hidden, std::size_t d_emb,
                        bool shared_towers, std::uint64_t seed) {
    if (d_in < 1 || d_hidden < 1 || d_emb < 2) {
        throw Error(ErrorCode::InvalidSpec, "tower dims too small (d_emb must be >= 2)");
    }
    std::mt19937_64 rng(seed);
    PolicyState state;
    state.shared_towers = shared_towers;
    state.query_tower = random_tower(d_in, d_hidden, d_emb, rng);
    state.target_tower = shared_towers ? state.query_tower : random_tower(d_in, d_hidden, d_emb, rng);
    return state;
}

Matrix encode_raw(const TowerParams& tower, const Matrix& inputs) {
    if (inputs.cols != tower.d_in()) {
        throw Error(ErrorCode::DimensionMismatch, "input dim does not match tower d_in");
    }
    Matrix hidden = matmul_nt(inputs, tower.w1); // n x d_hidden
    for (std::size_t i = 0; i < hidden.rows; ++i) {
        double* h = hidden.row(i);
        for (std::size_t j = 0; j < hidden.cols; ++j) h[j] = std::tanh(h[j] + tower.b1[j]);
    }
    Matrix out = matmul_nt(hidden, tower.w2); // n x d_emb
    for (std::size_t i = 0; i < out.rows; ++i) {
        double* o = out.row(i);
        for (std::size_t j = 0; j < out.cols; ++j) o[j] += tower.b2[j];
    }
    return out;
}

Matrix encode(const TowerParams& tower, const Matrix& inputs) {
    Matrix out = encode_raw(tower, inputs);
    for (std::size_t i = 0; i < out.rows; ++i) {
        double* o = out.row(i);
        const double n = norm2(o, out.cols);
        if (n <= kZeroNormThreshold) {
            throw Error(ErrorCode::ZeroVector, "embedding row " + std::to_string(i) + " underflowed");
        }
        for (std::size_t j = 0; j < out.cols; ++j) o[j] /= n;
    }
    return out;
}

namespace {

// tanh outputs cached from the forward pass; the affine pre-activations are
// not needed because dtanh = 1 - tanh^2.
struct TowerForward {
    Matrix hidden; // n x d_hidden
    Matrix out;    // n x d_emb
};

TowerForward tower_forward(const TowerParams& tower, const Matrix& inputs) {
    TowerForward f;
    f.hidden = matmul_nt(inputs, tower.w1);
    for (std::size_t i = 0; i < f.hidden.rows; ++i) {
        double* h = f.hidden.row(i);
        for (std::size_t j = 0; j < f.hidden.cols; ++j) h[j] = std::tanh(h[j] + tower.b1[j]);
    }
    f.out = matmul_nt(f.hidden, tower.w2);
    for (std::size_t i = 0; i < f.out.rows; ++i) {
        double* o = f.out.row(i);
        for (std::size_t j = 0; j < f.out.cols; ++j) o[j] += tower.b2[j];
    }
    return f;
}

std::vector<double> column_sums(const Matrix& m) {
    std::vector<double> sums(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* r = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) sums[j] += r[j];
    }
    return sums;
}

TowerGrads tower_backward(const TowerParams& tower, const Matrix& inputs, const TowerForward& f,
                          const Matrix& upstream) {
    TowerGrads g;
    g.w2 = matmul_tn(upstream, f.hidden); // d_emb x d_hidden
    g.b2 = column_sums(upstream);

    Matrix d_hidden = matmul_nn(upstream, tower.w2); // n x d_hidden
    for (std::size_t i = 0; i < d_hidden.rows; ++i) {
        double* dh = d_hidden.row(i);
        const double* h = f.hidden.row(i);
        for (std::size_t j = 0; j < d_hidden.cols; ++j) dh[j] *= 1.0 - h[j] * h[j];
    }
    g.w1 = matmul_tn(d_hidden, inputs); // d_hidden x d_in
    g.b1 = column_sums(d_hidden);
    return g;
}

void accumulate(TowerGrads& into, const TowerGrads& from) {
    for (std::size_t i = 0; i < into.w1.data.size(); ++i) into.w1.data[i] += from.w1.data[i];
    for (std::size_t i = 0; i < into.b1.size(); ++i) into.b1[i] += from.b1[i];
    for (std::size_t i = 0; i < into.w2.data.size(); ++i) into.w2.data[i] += from.w2.data[i];
    for (std::size_t i = 0; i < into.b2.size(); ++i) into.b2[i] += from.b2[i];
}

bool grads_finite(const TowerGrads& g) {
    return all_finite(g.w1) && all_finite(g.b1) && all_finite(g.w2) && all_finite(g.b2);
}

double squared_norm(const TowerGrads& g) {
    double s = 0.0;
    for (double v : g.w1.data) s += v * v;
    for (double v : g.b1) s += v * v;
    for (double v : g.w2.data) s += v * v;
    for (double v : g.b2) s += v * v;
    return s;
}

void apply_sgd(TowerParams& tower, const TowerGrads& g, double lr) {
    for (std::size_t i = 0; i < tower.w1.data.size(); ++i) tower.w1.data[i] -= lr * g.w1.data[i];
    for (std::size_t i = 0; i < tower.b1.size(); ++i) tower.b1[i] -= lr * g.b1[i];
    for (std::size_t i = 0; i < tower.w2.data.size(); ++i) tower.w2.data[i] -= lr * g.w2.data[i];
    for (std::size_t i = 0; i < tower.b2.size(); ++i) tower.b2[i] -= lr * g.b2[i];
}

} // namespace

StepResult backprop_step(PolicyState& state, const RawPairBatch& batch, const TrainConfig& config) {
    config.validate();
    if (!batch.queries.same_shape(batch.targets)) {
        throw Error(ErrorCode::ShapeMismatch, "query/target batch shapes differ");
    }
    const std::size_t n = batch.queries.rows;
    if (n % static_cast<std::size_t>(config.shards) != 0) {
        throw Error(ErrorCode::InvalidSpec, "batch rows must divide evenly across shards");
    }

    const TowerForward fq = tower_forward(state.query_tower, batch.queries);
    const TowerForward ft = tower_forward(state.target(), batch.targets);

    // Contiguous row slices become the logical devices; gather order restores
    // the original row order, so the union loss sees the monolithic batch.
    const std::size_t local = n / static_cast<std::size_t>(config.shards);
    std::vector<DeviceShard> shards(static_cast<std::size_t>(config.shards));
    for (std::size_t k = 0; k < shards.size(); ++k) {
        shards[k].device_id = static_cast<int>(k);
        Matrix q(local, fq.out.cols);
        Matrix t(local, ft.out.cols);
        std::memcpy(q.data.data(), fq.out.row(k * local), local * fq.out.cols * sizeof(double));
        std::memcpy(t.data.data(), ft.out.row(k * local), local * ft.out.cols * sizeof(double));
        shards[k].local_batch = make_in_batch(std::move(q), std::move(t));
    }

    const RewardSpec reward = config.loss.variant == LossVariant::HardnessWeighted
                                  ? RewardSpec::self_similarity()
                                  : RewardSpec::zero();
    CrossDeviceResult device_result = cross_device_loss(shards, config.loss, reward);
    LossResult& loss = device_result.total;
    if (!std::isfinite(loss.loss)) {
        throw Error(ErrorCode::NonFiniteGradient, "loss is not finite");
    }

    EmbeddingBatch union_batch;
    union_batch.queries = fq.out;
    union_batch.targets = ft.out;
    union_batch.positive_index.resize(n);
    for (std::size_t i = 0; i < n; ++i) union_batch.positive_index[i] = i;
    auto [d_raw_q, d_raw_t] = cosine_backward(union_batch, loss.grad_wrt_sim);

    TowerGrads query_grads = tower_backward(state.query_tower, batch.queries, fq, d_raw_q);
    TowerGrads target_grads = tower_backward(state.target(), batch.targets, ft, d_raw_t);

    StepResult result;
    result.loss = std::move(loss);

    double sq = 0.0;
    if (state.shared_towers) {
        accumulate(query_grads, target_grads);
        if (!grads_finite(query_grads)) {
            throw Error(ErrorCode::NonFiniteGradient, "non-finite parameter gradient");
        }
        if (!config.freeze_query_tower) {
            sq += squared_norm(query_grads);
            apply_sgd(state.query_tower, query_grads, config.learning_rate);
        }
    } else {
        if (!grads_finite(query_grads) || !grads_finite(target_grads)) {
            throw Error(ErrorCode::NonFiniteGradient, "non-finite parameter gradient");
        }
        if (!config.freeze_query_tower) {
            sq += squared_norm(query_grads);
            apply_sgd(state.query_tower, query_grads, config.learning_rate);
        }
        if (!config.freeze_target_tower) {
            sq += squared_norm(target_grads);
            apply_sgd(state.target_tower, target_grads, config.learning_rate);
        }
    }
    result.grad_norm = std::sqrt(sq);
    state.step_count += 1;
    return result;
}

namespace {

// n below the requested bound, rejection sampled so the schedule does not
// depend on the standard library's distribution internals.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

void fisher_yates(std::vector<std::size_t>& order, std::mt19937_64& rng) {
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[bounded(rng, i)]);
    }
}

constexpr std::uint64_t kScheduleSalt = 0x9E3779B97F4A7C15ull;

} // namespace

TrainTrace train(PolicyState& state, const PairDataset& data, const TrainConfig& config) {
    config.validate();
    if (data.size() < config.batch_size) {
        throw Error(ErrorCode::InvalidSpec, "dataset smaller than one batch");
    }

    std::mt19937_64 schedule_rng(config.seed ^ kScheduleSalt);
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    fisher_yates(order, schedule_rng);
    std::size_t cursor = 0;

    TrainTrace trace;
    trace.loss_per_step.reserve(static_cast<std::size_t>(config.steps));
    for (std::int64_t step = 0; step < config.steps; ++step) {
        if (cursor + config.batch_size > order.size()) {
            fisher_yates(order, schedule_rng);
            cursor = 0;
        }
        const std::vector<std::size_t> indices(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                               order.begin() + static_cast<std::ptrdiff_t>(cursor + config.batch_size));
        cursor += config.batch_size;

        const RawPairBatch batch = select_pairs(data, indices);
        if (step == 0) {
            std::uint64_t h = fnv1a(batch.queries.data);
            h = fnv1a(batch.targets.data, h);
            trace.first_batch_fingerprint = to_hex(h);
        }
        const StepResult result = backprop_step(state, batch, config);
        trace.loss_per_step.push_back(result.loss.loss);
    }
    return trace;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    return nlohmann::json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m;
    m.rows = j.at("rows").get<std::size_t>();
    m.cols = j.at("cols").get<std::size_t>();
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) {
        throw Error(ErrorCode::InvalidSpec, "matrix data length disagrees with rows*cols");
    }
    return m;
}

nlohmann::json tower_to_json(const TowerParams& tower) {
    return nlohmann::json{{"w1", matrix_to_json(tower.w1)},
                          {"b1", tower.b1},
                          {"w2", matrix_to_json(tower.w2)},
                          {"b2", tower.b2}};
}

TowerParams tower_from_json(const nlohmann::json& j) {
    TowerParams tower;
    tower.w1 = matrix_from_json(j.at("w1"));
    tower.b1 = j.at("b1").get<std::vector<double>>();
    tower.w2 = matrix_from_json(j.at("w2"));
    tower.b2 = j.at("b2").get<std::vector<double>>();
    if (tower.b1.size() != tower.w1.rows || tower.b2.size() != tower.w2.rows ||
        tower.w2.cols != tower.w1.rows) {
        throw Error(ErrorCode::InvalidSpec, "tower parameter shapes are inconsistent");
    }
    return tower;
}

} // namespace

void save_checkpoint(const PolicyState& state, const std::string& config_hash,
                     const std::string& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["config_hash"] = config_hash;
    j["step_count"] = state.step_count;
    j["shared_towers"] = state.shared_towers;
    j["query_tower"] = tower_to_json(state.query_tower);
    if (!state.shared_towers) j["target_tower"] = tower_to_json(state.target_tower);
    write_text_file(path, j.dump(2) + "\n");
}

PolicyState load_checkpoint(const std::string& path, std::string* config_hash_out) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidSpec, std::string("checkpoint is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != 1) {
            throw Error(ErrorCode::InvalidSpec, "unsupported checkpoint format_version");
        }
        PolicyState state;
        state.shared_towers = j.at("shared_towers").get<bool>();
        state.step_count = j.at("step_count").get<std::int64_t>();
        state.query_tower = tower_from_json(j.at("query_tower"));
        state.target_tower = state.shared_towers ? state.query_tower
                                                 : tower_from_json(j.at("target_tower"));
        if (config_hash_out) *config_hash_out = j.at("config_hash").get<std::string>();
        return state;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidSpec, std::string("malformed checkpoint: ") + e.what());
    }
}

} // namespace hwcl
