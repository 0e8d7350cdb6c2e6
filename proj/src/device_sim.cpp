#include "hwcl/device_sim.hpp"

#include <algorithm>
#include <cstring>
#include <set>
#include <string>

#include "hwcl/error.hpp"

namespace hwcl {

std::vector<GatheredView> gather_targets(const std::vector<DeviceShard>& shards) {
    if (shards.empty()) throw Error(ErrorCode::InvalidSpec, "no device shards");

    std::vector<const DeviceShard*> order;
    order.reserve(shards.size());
    std::set<int> seen;
    for (const DeviceShard& shard : shards) {
        if (shard.device_id < 0) {
            throw Error(ErrorCode::InvalidSpec, "negative device_id " + std::to_string(shard.device_id));
        }
        if (!seen.insert(shard.device_id).second) {
            throw Error(ErrorCode::DuplicateDeviceId,
                        "device_id " + std::to_string(shard.device_id) + " appears twice");
        }
        shard.local_batch.validate();
        if (shard.local_batch.dim() != shards.front().local_batch.dim()) {
            throw Error(ErrorCode::DimensionMismatch, "shards disagree on embedding dim");
        }
        order.push_back(&shard);
    }
    std::sort(order.begin(), order.end(), [](const DeviceShard* a, const DeviceShard* b) {
        return a->device_id < b->device_id;
    });

    const std::size_t d = order.front()->local_batch.dim();
    std::size_t total_targets = 0;
    for (const DeviceShard* shard : order) total_targets += shard->local_batch.num_targets();

    // One global target matrix, ascending device_id then local index. Every
    // view shares a copy of it so each "device" scores the same columns.
    Matrix global_targets(total_targets, d);
    std::vector<ShardOrigin> target_origin(total_targets);
    std::vector<std::size_t> shard_offset(order.size());
    std::size_t offset = 0;
    for (std::size_t s = 0; s < order.size(); ++s) {
        const EmbeddingBatch& batch = order[s]->local_batch;
        shard_offset[s] = offset;
        std::memcpy(global_targets.row(offset), batch.targets.data.data(),
                    batch.targets.data.size() * sizeof(double));
        for (std::size_t j = 0; j < batch.num_targets(); ++j) {
            target_origin[offset + j] = ShardOrigin{order[s]->device_id, j};
        }
        offset += batch.num_targets();
    }

    std::vector<GatheredView> views;
    views.reserve(order.size());
    for (std::size_t s = 0; s < order.size(); ++s) {
        const EmbeddingBatch& batch = order[s]->local_batch;
        GatheredView view;
        view.device_id = order[s]->device_id;
        view.local_queries = batch.queries;
        view.global_targets = global_targets;
        view.positive_offset.resize(batch.num_queries());
        view.query_origin.resize(batch.num_queries());
        for (std::size_t i = 0; i < batch.num_queries(); ++i) {
            view.positive_offset[i] = shard_offset[s] + batch.positive_index[i];
            view.query_origin[i] = ShardOrigin{order[s]->device_id, i};
        }
        view.target_origin = target_origin;
        views.push_back(std::move(view));
    }
    return views;
}

namespace {

RewardSpec slice_reward(const RewardSpec& reward, std::size_t row_begin, std::size_t row_count) {
    if (reward.kind != RewardSpec::Kind::External || !reward.external_values) return reward;
    const Matrix& full = *reward.external_values;
    if (row_begin + row_count > full.rows) {
        throw Error(ErrorCode::RewardShapeMismatch, "external reward has fewer rows than queries");
    }
    Matrix slice(row_count, full.cols);
    std::memcpy(slice.data.data(), full.row(row_begin), row_count * full.cols * sizeof(double));
    return RewardSpec::external(std::move(slice));
}

} // namespace

CrossDeviceResult cross_device_loss(const std::vector<DeviceShard>& shards,
                                    const LossConfig& config, const RewardSpec& reward) {
    const std::vector<GatheredView> views = gather_targets(shards);

    // Union batch in gather order. Row i of its similarity matrix is computed
    // by the same per-row kernel a device would run, so per-device results
    // below match the total bit for bit, not just to tolerance.
    std::size_t total_queries = 0;
    for (const GatheredView& view : views) total_queries += view.local_queries.rows;
    const std::size_t d = views.front().local_queries.cols;

    EmbeddingBatch union_batch;
    union_batch.queries = Matrix(total_queries, d);
    union_batch.targets = views.front().global_targets;
    union_batch.positive_index.resize(total_queries);
    std::vector<ShardOrigin> row_origin(total_queries);
    std::size_t offset = 0;
    for (const GatheredView& view : views) {
        std::memcpy(union_batch.queries.row(offset), view.local_queries.data.data(),
                    view.local_queries.data.size() * sizeof(double));
        for (std::size_t i = 0; i < view.local_queries.rows; ++i) {
            union_batch.positive_index[offset + i] = view.positive_offset[i];
            row_origin[offset + i] = view.query_origin[i];
        }
        offset += view.local_queries.rows;
    }

    SimilarityMatrix union_sim = cosine_matrix(union_batch);
    union_sim.row_origin = row_origin;
    union_sim.col_origin = views.front().target_origin;

    CrossDeviceResult result;
    result.total = contrastive_loss(union_sim, union_batch.positive_index, config, reward);

    result.per_device.reserve(views.size());
    offset = 0;
    for (const GatheredView& view : views) {
        EmbeddingBatch local;
        local.queries = view.local_queries;
        local.targets = view.global_targets;
        local.positive_index = view.positive_offset;

        SimilarityMatrix sim = cosine_matrix(local);
        sim.row_origin = view.query_origin;
        sim.col_origin = view.target_origin;

        const RewardSpec local_reward = slice_reward(reward, offset, view.local_queries.rows);
        result.per_device.push_back(contrastive_loss(sim, local.positive_index, config, local_reward));
        offset += view.local_queries.rows;
    }
    return result;
}

} // namespace hwcl
