#include "e3d/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "e3d/blocks.hpp"

namespace e3d {

const char* arch_name(Arch a) {
    switch (a) {
        case Arch::kSqueezeNet: return "squeezenet";
        case Arch::kMobileNetV1: return "mobilenet_v1";
        case Arch::kMobileNetV2: return "mobilenet_v2";
        case Arch::kShuffleNetV1: return "shufflenet_v1";
        case Arch::kShuffleNetV2: return "shufflenet_v2";
    }
    return "unknown";
}

Arch arch_from_name(const std::string& name) {
    for (Arch a : all_archs()) {
        if (name == arch_name(a)) return a;
    }
    throw std::invalid_argument("unknown architecture: " + name);
}

std::vector<Arch> all_archs() {
    return {Arch::kSqueezeNet, Arch::kMobileNetV1, Arch::kMobileNetV2, Arch::kShuffleNetV1,
            Arch::kShuffleNetV2};
}

const std::vector<double>& stock_widths(Arch a) {
    static const std::vector<double> squeeze{1.0};
    static const std::vector<double> mn1{0.5, 1.0, 1.5, 2.0};
    static const std::vector<double> mn2{0.2, 0.45, 0.7, 1.0};
    static const std::vector<double> sn1{0.5, 1.0, 1.5, 2.0};
    static const std::vector<double> sn2{0.25, 0.5, 1.0, 1.5, 2.0};
    switch (a) {
        case Arch::kSqueezeNet: return squeeze;
        case Arch::kMobileNetV1: return mn1;
        case Arch::kMobileNetV2: return mn2;
        case Arch::kShuffleNetV1: return sn1;
        case Arch::kShuffleNetV2: return sn2;
    }
    return squeeze;
}

bool is_stock_width(Arch a, double width) {
    for (double w : stock_widths(a)) {
        if (std::fabs(w - width) < 1e-9) return true;
    }
    return false;
}

ShuffleNetV2Channels shufflenet_v2_channels(double width) {
    if (std::fabs(width - 0.25) < 1e-9) return {32, 64, 128, 1024};
    if (std::fabs(width - 0.5) < 1e-9) return {48, 96, 192, 1024};
    if (std::fabs(width - 1.0) < 1e-9) return {116, 232, 464, 1024};
    if (std::fabs(width - 1.5) < 1e-9) return {176, 352, 704, 1024};
    if (std::fabs(width - 2.0) < 1e-9) return {244, 488, 976, 2048};
    // Off-table widths scale the 1.0x level; widths >= 2 widen the head.
    auto scale = [&](int64_t base) {
        int64_t c = static_cast<int64_t>(static_cast<double>(base) * width);
        if (c < 2) c = 2;
        if (c % 2 != 0) ++c; // stride-1 units split channels in half
        return c;
    };
    return {scale(116), scale(232), scale(464), width >= 2.0 ? 2048 : 1024};
}

namespace {

/// Truncating channel scaling, matching integer-cast semantics.
int64_t scaled(int64_t base, double width) {
    auto c = static_cast<int64_t>(static_cast<double>(base) * width);
    return std::max<int64_t>(1, c);
}

ConvSpec stem_conv(int64_t in, int64_t out) {
    return ConvSpec{.in_ch = in, .out_ch = out, .kernel = {3, 3, 3}, .stride = {1, 2, 2},
                    .padding = {1, 1, 1}};
}

PoolSpec maxpool3_s2() {
    return PoolSpec{.kind = PoolKind::kMax, .kernel = {3, 3, 3}, .stride = {2, 2, 2},
                    .padding = {1, 1, 1}};
}

void check_width(const ModelConfig& cfg) {
    if (cfg.arch == Arch::kSqueezeNet && std::fabs(cfg.width - 1.0) > 1e-9) {
        throw std::invalid_argument("squeezenet has a single fixed configuration (width 1.0)");
    }
    if (!cfg.allow_any_width && !is_stock_width(cfg.arch, cfg.width)) {
        throw std::invalid_argument(std::string("width ") + std::to_string(cfg.width) +
                                    " is not a stock multiplier for " + arch_name(cfg.arch) +
                                    " (pass --allow-any-width to override)");
    }
    if (cfg.classes < 2) throw std::invalid_argument("classes must be >= 2");
}

ModelGraph build_squeezenet(const ModelConfig& cfg) {
    GraphBuilder b({1, cfg.in_channels, cfg.frames, cfg.size, cfg.size});
    int cur = b.conv("conv1", b.input_id(), stem_conv(cfg.in_channels, 64));
    cur = b.batchnorm("conv1.bn", cur);
    cur = b.relu("conv1.relu", cur);
    b.checkpoint("conv1", cur);
    cur = b.maxpool("maxpool1", cur, maxpool3_s2());
    b.checkpoint("maxpool1", cur);

    struct FireCfg { int64_t in, squeeze, expand; bool bypass; };
    const FireCfg fires[] = {
        {64, 16, 64, false},  {128, 16, 64, true},  {128, 32, 128, false}, {256, 32, 128, true},
        {256, 48, 192, false}, {384, 48, 192, true}, {384, 64, 256, false}, {512, 64, 256, true},
    };
    int idx = 2;
    for (const FireCfg& f : fires) {
        BlockSpec s{.family = BlockFamily::kFire, .in_ch = f.in, .out_ch = 2 * f.expand,
                    .stride = 1, .squeeze_ch = f.squeeze, .expand1_ch = f.expand,
                    .expand3_ch = f.expand, .bypass = f.bypass};
        const std::string name = "fire" + std::to_string(idx);
        cur = append_block(b, cur, s, name);
        b.checkpoint(name, cur);
        if (idx == 3 || idx == 5 || idx == 7) {
            const std::string pool = "maxpool" + std::to_string(idx);
            cur = b.maxpool(pool, cur, maxpool3_s2());
            b.checkpoint(pool, cur);
        }
        ++idx;
    }

    ConvSpec head{.in_ch = 512, .out_ch = cfg.classes, .kernel = {1, 1, 1}, .stride = {1, 1, 1},
                  .padding = {0, 0, 0}, .has_bias = true};
    cur = b.conv("conv10", cur, head);
    cur = b.relu("conv10.relu", cur);
    b.checkpoint("conv10", cur);
    cur = b.global_avgpool("avgpool", cur);
    b.checkpoint("avgpool", cur);
    return std::move(b).finish(arch_name(cfg.arch), cfg.width, cfg.classes);
}

ModelGraph build_mobilenet_v1(const ModelConfig& cfg) {
    GraphBuilder b({1, cfg.in_channels, cfg.frames, cfg.size, cfg.size});
    const int64_t stem = scaled(32, cfg.width);
    int cur = b.conv("conv1", b.input_id(), stem_conv(cfg.in_channels, stem));
    cur = b.batchnorm("conv1.bn", cur);
    cur = b.relu("conv1.relu", cur);
    b.checkpoint("conv1", cur);

    struct Row { int64_t out; int64_t stride; };
    const Row rows[] = {{64, 2},  {128, 2}, {128, 1}, {256, 2},  {256, 1},  {512, 2}, {512, 1},
                        {512, 1}, {512, 1}, {512, 1}, {512, 1},  {1024, 1}, {1024, 1}};
    int64_t in = stem;
    int idx = 1;
    for (const Row& r : rows) {
        const int64_t out = scaled(r.out, cfg.width);
        BlockSpec s{.family = BlockFamily::kMobileNetV1, .in_ch = in, .out_ch = out,
                    .stride = r.stride};
        const std::string name = "block" + std::to_string(idx);
        cur = append_block(b, cur, s, name);
        b.checkpoint(name, cur);
        in = out;
        ++idx;
    }
    cur = b.global_avgpool("avgpool", cur);
    b.checkpoint("avgpool", cur);
    cur = b.linear("classifier", cur, cfg.classes);
    b.checkpoint("classifier", cur);
    return std::move(b).finish(arch_name(cfg.arch), cfg.width, cfg.classes);
}

ModelGraph build_mobilenet_v2(const ModelConfig& cfg) {
    GraphBuilder b({1, cfg.in_channels, cfg.frames, cfg.size, cfg.size});
    const int64_t stem = scaled(32, cfg.width);
    int cur = b.conv("conv1", b.input_id(), stem_conv(cfg.in_channels, stem));
    cur = b.batchnorm("conv1.bn", cur);
    cur = b.relu6("conv1.relu6", cur);
    b.checkpoint("conv1", cur);

    struct Stage { int64_t t, c, n, stride; };
    const Stage stages[] = {{1, 16, 1, 1}, {6, 24, 2, 2}, {6, 32, 3, 2}, {6, 64, 4, 2},
                            {6, 96, 3, 1}, {6, 160, 3, 2}, {6, 320, 1, 1}};
    int64_t in = stem;
    int idx = 1;
    for (const Stage& st : stages) {
        const int64_t out = scaled(st.c, cfg.width);
        for (int64_t r = 0; r < st.n; ++r) {
            BlockSpec s{.family = BlockFamily::kMobileNetV2, .in_ch = in, .out_ch = out,
                        .stride = r == 0 ? st.stride : 1, .expansion = st.t};
            const std::string name = "block" + std::to_string(idx);
            cur = append_block(b, cur, s, name);
            b.checkpoint(name, cur);
            in = out;
            ++idx;
        }
    }
    const int64_t last = cfg.width > 1.0 ? scaled(1280, cfg.width) : 1280;
    ConvSpec head{.in_ch = in, .out_ch = last, .kernel = {1, 1, 1}, .stride = {1, 1, 1},
                  .padding = {0, 0, 0}};
    cur = b.conv("conv_last", cur, head);
    cur = b.batchnorm("conv_last.bn", cur);
    cur = b.relu6("conv_last.relu6", cur);
    b.checkpoint("conv_last", cur);
    cur = b.global_avgpool("avgpool", cur);
    b.checkpoint("avgpool", cur);
    cur = b.linear("classifier", cur, cfg.classes);
    b.checkpoint("classifier", cur);
    return std::move(b).finish(arch_name(cfg.arch), cfg.width, cfg.classes);
}

ModelGraph build_shufflenet_v1(const ModelConfig& cfg) {
    GraphBuilder b({1, cfg.in_channels, cfg.frames, cfg.size, cfg.size});
    const int64_t groups = 3;
    const int64_t stem = 24; // the stem is not scaled by the width multiplier
    int cur = b.conv("conv1", b.input_id(), stem_conv(cfg.in_channels, stem));
    cur = b.batchnorm("conv1.bn", cur);
    cur = b.relu("conv1.relu", cur);
    b.checkpoint("conv1", cur);
    cur = b.maxpool("maxpool", cur, maxpool3_s2());
    b.checkpoint("maxpool", cur);

    const int64_t base[3] = {240, 480, 960};
    const int64_t repeats[3] = {4, 8, 4};
    int64_t in = stem;
    for (int stage = 0; stage < 3; ++stage) {
        const int64_t out = scaled(base[stage], cfg.width);
        for (int64_t u = 0; u < repeats[stage]; ++u) {
            BlockSpec s{.family = BlockFamily::kShuffleNetV1, .in_ch = in, .out_ch = out,
                        .stride = u == 0 ? 2 : 1, .groups = groups,
                        .grouped_first_pointwise = !(stage == 0 && u == 0)};
            const std::string name =
                "stage" + std::to_string(stage + 2) + ".unit" + std::to_string(u);
            cur = append_block(b, cur, s, name);
            b.checkpoint(name, cur);
            in = out;
        }
    }
    cur = b.global_avgpool("avgpool", cur);
    b.checkpoint("avgpool", cur);
    cur = b.linear("classifier", cur, cfg.classes);
    b.checkpoint("classifier", cur);
    return std::move(b).finish(arch_name(cfg.arch), cfg.width, cfg.classes);
}

ModelGraph build_shufflenet_v2(const ModelConfig& cfg) {
    GraphBuilder b({1, cfg.in_channels, cfg.frames, cfg.size, cfg.size});
    const auto ch = shufflenet_v2_channels(cfg.width);
    const int64_t stem = 24;
    int cur = b.conv("conv1", b.input_id(), stem_conv(cfg.in_channels, stem));
    cur = b.batchnorm("conv1.bn", cur);
    cur = b.relu("conv1.relu", cur);
    b.checkpoint("conv1", cur);
    cur = b.maxpool("maxpool", cur, maxpool3_s2());
    b.checkpoint("maxpool", cur);

    const int64_t widths[3] = {ch.c1, ch.c2, ch.c3};
    const int64_t repeats[3] = {4, 8, 4};
    int64_t in = stem;
    for (int stage = 0; stage < 3; ++stage) {
        const int64_t out = widths[stage];
        for (int64_t u = 0; u < repeats[stage]; ++u) {
            BlockSpec s{.family = BlockFamily::kShuffleNetV2, .in_ch = in, .out_ch = out,
                        .stride = u == 0 ? 2 : 1};
            const std::string name =
                "stage" + std::to_string(stage + 2) + ".unit" + std::to_string(u);
            cur = append_block(b, cur, s, name);
            b.checkpoint(name, cur);
            in = out;
        }
    }
    ConvSpec head{.in_ch = ch.c3, .out_ch = ch.c4, .kernel = {1, 1, 1}, .stride = {1, 1, 1},
                  .padding = {0, 0, 0}};
    cur = b.conv("conv_last", cur, head);
    cur = b.batchnorm("conv_last.bn", cur);
    cur = b.relu("conv_last.relu", cur);
    b.checkpoint("conv_last", cur);
    cur = b.global_avgpool("avgpool", cur);
    b.checkpoint("avgpool", cur);
    cur = b.linear("classifier", cur, cfg.classes);
    b.checkpoint("classifier", cur);
    return std::move(b).finish(arch_name(cfg.arch), cfg.width, cfg.classes);
}

} // namespace

ModelGraph build_model(const ModelConfig& cfg) {
    if (cfg.in_channels < 1 || cfg.frames < 1 || cfg.size < 1) {
        throw std::invalid_argument("build_model: invalid input shape");
    }
    check_width(cfg);
    switch (cfg.arch) {
        case Arch::kSqueezeNet: return build_squeezenet(cfg);
        case Arch::kMobileNetV1: return build_mobilenet_v1(cfg);
        case Arch::kMobileNetV2: return build_mobilenet_v2(cfg);
        case Arch::kShuffleNetV1: return build_shufflenet_v1(cfg);
        case Arch::kShuffleNetV2: return build_shufflenet_v2(cfg);
    }
    throw std::logic_error("build_model: unknown architecture");
}

} // namespace e3d
