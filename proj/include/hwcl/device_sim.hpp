#pragma once

#include <cstddef>
#include <vector>

#include "hwcl/embedding.hpp"
#include "hwcl/loss.hpp"

namespace hwcl {

// One logical device holding a slice of the batch. Devices are plain data;
// the "gather" below is an in-process concatenation, not a collective.
struct DeviceShard {
    int device_id = 0;
    EmbeddingBatch local_batch;
};

// What a device sees after the all-gather: its own queries against the union
// of every device's targets, in the canonical device-id-then-local order.
struct GatheredView {
    int device_id = 0;
    Matrix local_queries;
    Matrix global_targets;
    std::vector<std::size_t> positive_offset; // global column of each local query's positive
    std::vector<ShardOrigin> query_origin;
    std::vector<ShardOrigin> target_origin;
};

// Concatenates all shards' targets in ascending device_id order. Every view
// holds the identical global target matrix. Throws DimensionMismatch when
// embedding dims differ, DuplicateDeviceId / InvalidSpec on bad ids.
std::vector<GatheredView> gather_targets(const std::vector<DeviceShard>& shards);

struct CrossDeviceResult {
    LossResult total;                   // over all queries, device order
    std::vector<LossResult> per_device; // each device's own mean and gradients
};

// Loss over gathered negatives: each device scores its local queries against
// all N*K targets. The total equals the monolithic loss on the union batch;
// the reduction runs in ascending device_id, then row index.
CrossDeviceResult cross_device_loss(const std::vector<DeviceShard>& shards,
                                    const LossConfig& config, const RewardSpec& reward);

} // namespace hwcl
