#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "e3d/graph.hpp"

namespace e3d {

enum class Arch {
    kSqueezeNet,
    kMobileNetV1,
    kMobileNetV2,
    kShuffleNetV1,
    kShuffleNetV2,
};

const char* arch_name(Arch a);
Arch arch_from_name(const std::string& name); // throws on unknown
std::vector<Arch> all_archs();

/// Stock width multipliers per architecture. Other values are accepted only
/// behind an explicit override; SqueezeNet has a single fixed configuration.
const std::vector<double>& stock_widths(Arch a);
bool is_stock_width(Arch a, double width);

/// Stage channels (c1, c2, c3, c4) for the ShuffleNetV2 complexity levels.
struct ShuffleNetV2Channels {
    int64_t c1, c2, c3, c4;
};
ShuffleNetV2Channels shufflenet_v2_channels(double width);

struct ModelConfig {
    Arch arch = Arch::kShuffleNetV2;
    double width = 1.0;
    int64_t classes = 600;
    int64_t in_channels = 3;
    int64_t frames = 16;
    int64_t size = 112;
    bool allow_any_width = false;
};

/// Assembles the architecture as an uninitialized graph whose per-stage
/// output shapes reproduce the stock layer tables. Throws on an unknown
/// width unless allow_any_width is set.
ModelGraph build_model(const ModelConfig& cfg);

} // namespace e3d
