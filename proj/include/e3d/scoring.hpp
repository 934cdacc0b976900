#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "e3d/graph.hpp"

namespace e3d {

/// Synthetic or file-backed network input.
struct ClipSource {
    enum class Kind { kSeed, kConstant, kFile } kind = Kind::kSeed;
    uint64_t seed = 0;
    float constant = 0.0f;
    std::string path;

    static ClipSource from_seed(uint64_t s) { return {Kind::kSeed, s, 0.0f, {}}; }
    static ClipSource from_constant(float v) { return {Kind::kConstant, 0, v, {}}; }
    static ClipSource from_file(std::string p) { return {Kind::kFile, 0, 0.0f, std::move(p)}; }
};

/// Deterministic clip generation: seeded uniform values in [-1, 1), a
/// constant fill, or a single-tensor E3DW file (shape-checked).
Tensor5 make_clip(const Shape5& shape, const ClipSource& source);

struct VideoScore {
    int64_t class_index = 0;
    std::vector<float> probabilities;
};

/// Mean of per-clip softmax distributions; argmax breaks ties toward the
/// lowest index.
VideoScore aggregate_scores(const std::vector<std::vector<float>>& clip_scores);

/// Runs every clip through the model and aggregates the scores.
VideoScore score_video(const ModelGraph& graph, const std::vector<Tensor5>& clips,
                       const ExecContext& ctx = {});

} // namespace e3d
