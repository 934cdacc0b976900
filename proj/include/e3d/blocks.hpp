#pragma once

#include <cstdint>
#include <string>

#include "e3d/graph.hpp"

namespace e3d {

enum class BlockFamily {
    kFire,
    kMobileNetV1,
    kMobileNetV2,
    kShuffleNetV1,
    kShuffleNetV2,
};

const char* block_family_name(BlockFamily f);

/// Hyperparameters for one block instance. `stride` is uniform over the
/// three spatial axes (1 or 2). Family-specific fields:
///   fire:          squeeze_ch, expand1_ch, expand3_ch, bypass
///   mobilenet_v2:  expansion t (>= 1); residual add is implied by
///                  stride == 1 && in_ch == out_ch
///   shufflenet_v1: groups, grouped_first_pointwise
struct BlockSpec {
    BlockFamily family = BlockFamily::kFire;
    int64_t in_ch = 0;
    int64_t out_ch = 0;
    int64_t stride = 1;

    int64_t squeeze_ch = 0;
    int64_t expand1_ch = 0;
    int64_t expand3_ch = 0;
    bool bypass = false;

    int64_t expansion = 1;

    int64_t groups = 1;
    bool grouped_first_pointwise = true;

    void validate() const; // throws std::invalid_argument
};

/// Appends the block's layers to the builder and returns the output node id.
/// Node names are prefixed with `prefix` ("fire2", "stage1.unit0", ...).
int append_block(GraphBuilder& b, int input, const BlockSpec& spec, const std::string& prefix);

/// Convenience for tests and the verification suite: a graph holding exactly
/// one block.
ModelGraph make_block_graph(const BlockSpec& spec, Shape5 input_shape);

} // namespace e3d
