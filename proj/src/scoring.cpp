#include "e3d/scoring.hpp"

#include <stdexcept>

#include "e3d/weights_io.hpp"

namespace e3d {

Tensor5 make_clip(const Shape5& shape, const ClipSource& source) {
    switch (source.kind) {
        case ClipSource::Kind::kConstant: return Tensor5(shape, source.constant);
        case ClipSource::Kind::kSeed: {
            Tensor5 t(shape);
            SplitMix64 rng(source.seed);
            for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = rng.next_unit();
            return t;
        }
        case ClipSource::Kind::kFile: return load_tensor(source.path, shape);
    }
    throw std::logic_error("make_clip: unknown source");
}

VideoScore aggregate_scores(const std::vector<std::vector<float>>& clip_scores) {
    if (clip_scores.empty()) throw std::invalid_argument("aggregate_scores: no clips");
    const size_t classes = clip_scores.front().size();
    std::vector<double> acc(classes, 0.0);
    for (const auto& scores : clip_scores) {
        if (scores.size() != classes) {
            throw std::invalid_argument("aggregate_scores: inconsistent score lengths");
        }
        const auto probs = softmax(scores);
        for (size_t i = 0; i < classes; ++i) acc[i] += probs[i];
    }
    VideoScore out;
    out.probabilities.resize(classes);
    const double inv = 1.0 / static_cast<double>(clip_scores.size());
    for (size_t i = 0; i < classes; ++i) {
        out.probabilities[i] = static_cast<float>(acc[i] * inv);
    }
    out.class_index = 0;
    for (size_t i = 1; i < classes; ++i) {
        if (out.probabilities[i] > out.probabilities[static_cast<size_t>(out.class_index)]) {
            out.class_index = static_cast<int64_t>(i);
        }
    }
    return out;
}

VideoScore score_video(const ModelGraph& graph, const std::vector<Tensor5>& clips,
                       const ExecContext& ctx) {
    if (clips.empty()) throw std::invalid_argument("score_video: no clips");
    std::vector<std::vector<float>> all;
    all.reserve(clips.size());
    for (const Tensor5& clip : clips) {
        const Tensor5 out = forward(graph, clip, ctx);
        for (auto& row : scores_from_output(out)) all.push_back(std::move(row));
    }
    return aggregate_scores(all);
}

} // namespace e3d
