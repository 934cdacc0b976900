#include <doctest.h>

#include <cmath>
#include <map>

#include "e3d/analyzer.hpp"
#include "e3d/models.hpp"
#include "test_util.hpp"

using namespace e3d;

namespace {

/// Brute-force multiply counter: walks the same loop nest as the naive
/// convolution kernel and counts one multiply per tap, padding included
/// (padded taps multiply an implicit zero). volatile keeps the compiler from
/// collapsing the loops.
int64_t brute_force_conv_macs(const Shape5& in, const ConvSpec& spec) {
    const Shape5 out = conv_output_shape(in, spec);
    volatile int64_t count = 0;
    for (int64_t n = 0; n < out.n; ++n) {
        for (int64_t oc = 0; oc < out.c; ++oc) {
            for (int64_t od = 0; od < out.d; ++od) {
                for (int64_t oh = 0; oh < out.h; ++oh) {
                    for (int64_t ow = 0; ow < out.w; ++ow) {
                        for (int64_t icl = 0; icl < spec.in_ch / spec.groups; ++icl) {
                            for (int64_t kd = 0; kd < spec.kernel[0]; ++kd) {
                                for (int64_t kh = 0; kh < spec.kernel[1]; ++kh) {
                                    for (int64_t kw = 0; kw < spec.kernel[2]; ++kw) {
                                        count = count + 1;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return count;
}

int64_t layer_value(const ProfileReport& rep, const std::string& name, bool params) {
    for (const LayerRecord& r : rep.layers) {
        if (r.name == name) return params ? r.params : r.macs;
    }
    FAIL("layer not found: ", name);
    return -1;
}

} // namespace

TEST_CASE("closed-form parameter counts") {
    // 3x3x3 conv, 3 -> 64, no bias: 3*27*64.
    GraphBuilder b({1, 3, 16, 112, 112});
    ConvSpec stem{.in_ch = 3, .out_ch = 64, .kernel = {3, 3, 3}, .stride = {1, 2, 2},
                  .padding = {1, 1, 1}};
    b.conv("stem", b.input_id(), stem);
    ModelGraph g = std::move(b).finish("probe", 1.0, 2);
    const auto params = count_params(g);
    CHECK(params[1] == 5184);
    CHECK(total_params(g) == 5184);
}

TEST_CASE("closed-form MAC counts match the brute-force multiply counter") {
    // The documented stem figure.
    ConvSpec stem{.in_ch = 3, .out_ch = 64, .kernel = {3, 3, 3}, .stride = {1, 2, 2},
                  .padding = {1, 1, 1}};
    const Shape5 in{1, 3, 16, 112, 112};
    CHECK(conv_macs(stem, conv_output_shape(in, stem)) == 260112384);
    CHECK(brute_force_conv_macs(in, stem) == 260112384);

    // Pointwise mixing layer.
    ConvSpec pw{.in_ch = 116, .out_ch = 116, .kernel = {1, 1, 1}, .stride = {1, 1, 1},
                .padding = {0, 0, 0}};
    const Shape5 pin{1, 116, 4, 14, 14};
    CHECK(conv_macs(pw, conv_output_shape(pin, pw)) == 10549504);
    CHECK(brute_force_conv_macs(pin, pw) == 10549504);

    // Randomized small configurations, grouped and strided.
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int64_t> dim(1, 6);
    for (int c = 0; c < 25; ++c) {
        const int64_t g = 1 + static_cast<int64_t>(rng() % 3);
        ConvSpec spec{.in_ch = g * dim(rng), .out_ch = g * dim(rng),
                      .kernel = {1 + static_cast<int64_t>(rng() % 3), 1 + static_cast<int64_t>(rng() % 3),
                                 1 + static_cast<int64_t>(rng() % 3)},
                      .stride = {1 + static_cast<int64_t>(rng() % 2), 1, 1 + static_cast<int64_t>(rng() % 2)},
                      .padding = {1, 1, 1},
                      .groups = g};
        const Shape5 shape{1 + static_cast<int64_t>(rng() % 2), spec.in_ch,
                           std::max(dim(rng), spec.kernel[0]), std::max(dim(rng), spec.kernel[1]),
                           std::max(dim(rng), spec.kernel[2])};
        const Shape5 out = conv_output_shape(shape, spec);
        // Closed form is per batch item; the loop nest covers the batch.
        CHECK(brute_force_conv_macs(shape, spec) == shape.n * conv_macs(spec, out));
    }
}

TEST_CASE("structure counts reproduce the published comparison exactly") {
    const struct { Arch arch; int64_t layers, nonlin, skips; } table[] = {
        {Arch::kSqueezeNet, 18, 18, 4},
        {Arch::kShuffleNetV1, 50, 33, 16},
        {Arch::kShuffleNetV2, 51, 34, 16},
        {Arch::kMobileNetV1, 28, 27, 0},
        {Arch::kMobileNetV2, 53, 35, 10},
    };
    for (const auto& row : table) {
        ModelGraph g = build_model({.arch = row.arch, .width = stock_widths(row.arch).back()});
        const StructureCounts got = count_structure(g);
        INFO(arch_name(row.arch));
        CHECK(got.layers == row.layers);
        CHECK(got.nonlin == row.nonlin);
        CHECK(got.skips == row.skips);
    }
    // Width does not change the structure.
    for (double w : stock_widths(Arch::kShuffleNetV1)) {
        const StructureCounts got =
            count_structure(build_model({.arch = Arch::kShuffleNetV1, .width = w}));
        CHECK(got == StructureCounts{50, 33, 16});
    }
}

TEST_CASE("frozen parameter totals for stock configurations") {
    const struct { Arch arch; double w; int64_t params; } rows[] = {
        {Arch::kSqueezeNet, 1.0, 2142616},
        {Arch::kMobileNetV1, 1.0, 3912984},
        {Arch::kMobileNetV1, 2.0, 14104536},
        {Arch::kMobileNetV2, 0.45, 1399834},
        {Arch::kMobileNetV2, 1.0, 3122648},
        {Arch::kShuffleNetV1, 0.5, 547224},
        {Arch::kShuffleNetV1, 1.0, 1521504},
        {Arch::kShuffleNetV2, 0.25, 829656},
        {Arch::kShuffleNetV2, 1.0, 1914180},
    };
    for (const auto& r : rows) {
        INFO(arch_name(r.arch), " ", r.w);
        CHECK(total_params(build_model({.arch = r.arch, .width = r.w})) == r.params);
    }
}

TEST_CASE("published comparison: params within 5% on all stock rows") {
    for (const PublishedRow& row : published_rows()) {
        ModelGraph g = build_model({.arch = arch_from_name(row.arch), .width = row.width});
        const double got_m = static_cast<double>(total_params(g)) / 1e6;
        INFO(row.arch, " ", row.width, ": ", got_m, "M vs ", row.params_m, "M");
        CHECK(std::fabs(got_m - row.params_m) / row.params_m <= 0.05);
    }
}

TEST_CASE("report carries a per-layer discrepancy table when MACs disagree") {
    for (const PublishedRow& row : published_rows()) {
        ModelGraph g = build_model({.arch = arch_from_name(row.arch), .width = row.width});
        const ProfileReport rep = emit_report(g);
        REQUIRE(rep.published.has_value());
        const auto& cmp = *rep.published;
        INFO(row.arch, " ", row.width, " macs delta ", cmp.macs_delta_pct, "%");
        if (!cmp.macs_within_25pct || !cmp.params_within_5pct) {
            CHECK_FALSE(cmp.discrepancy.empty());
        }
        CHECK(cmp.params_within_5pct);
    }
}

TEST_CASE("pointwise-dominated layers scale quadratically with width") {
    ModelGraph g1 = build_model({.arch = Arch::kMobileNetV1, .width = 1.0});
    ModelGraph g2 = build_model({.arch = Arch::kMobileNetV1, .width = 2.0});
    const ProfileReport r1 = emit_report(g1);
    const ProfileReport r2 = emit_report(g2);
    int checked = 0;
    for (const LayerRecord& l : r1.layers) {
        if (l.kind != "conv3d" || l.name.find(".pw") == std::string::npos) continue;
        // Doubling the width exactly quadruples every pointwise conv.
        CHECK(layer_value(r2, l.name, true) == 4 * l.params);
        CHECK(layer_value(r2, l.name, false) == 4 * l.macs);
        ++checked;
    }
    CHECK(checked == 13);
}

TEST_CASE("depthwise separable saving ratio is 1/out + 1/27 exactly") {
    const Shape5 out_shape{1, 64, 4, 14, 14};
    ConvSpec dw{.in_ch = 64, .out_ch = 64, .kernel = {3, 3, 3}, .stride = {1, 1, 1},
                .padding = {1, 1, 1}, .groups = 64};
    ConvSpec pw{.in_ch = 64, .out_ch = 64, .kernel = {1, 1, 1}, .stride = {1, 1, 1},
                .padding = {0, 0, 0}};
    ConvSpec full{.in_ch = 64, .out_ch = 64, .kernel = {3, 3, 3}, .stride = {1, 1, 1},
                  .padding = {1, 1, 1}};
    const int64_t separable = conv_macs(dw, out_shape) + conv_macs(pw, out_shape);
    const int64_t standard = conv_macs(full, out_shape);
    // separable / standard == 1/out_ch + 1/27, checked in integers:
    CHECK(separable * 27 * 64 == standard * (27 + 64));
}

TEST_CASE("report totals equal column sums and JSON round-trips") {
    ModelGraph g = build_model({.arch = Arch::kShuffleNetV2, .width = 2.0});
    ProfileReport rep = emit_report(g);
    int64_t params = 0, macs = 0;
    for (const LayerRecord& l : rep.layers) {
        params += l.params;
        macs += l.macs;
    }
    CHECK(params == rep.total_params);
    CHECK(macs == rep.total_macs);
    CHECK(rep.width == 2.0);

    const std::string text = report_to_json(rep);
    const ProfileReport back = report_from_json(text);
    CHECK(report_to_json(back) == text);
    CHECK(back.layers == rep.layers);
    CHECK(back.structure == rep.structure);

    // Bench block serializes too.
    BenchStats bs;
    bs.batch = 8;
    bs.warmup = 3;
    bs.iters = 3;
    bs.threads = 2;
    bs.iter_seconds = {0.5, 0.5, 0.5};
    bs.cps_mean = 16.0;
    bs.cps_median = 16.0;
    bs.cps_std = 0.0;
    const std::string with_bench = report_to_json(emit_report(g, bs));
    const ProfileReport parsed = report_from_json(with_bench);
    REQUIRE(parsed.bench.has_value());
    CHECK(parsed.bench->cps_mean == 16.0);
    CHECK(report_to_json(parsed) == with_bench);
}

TEST_CASE("static shape inference for mobilenet v2 stage ends") {
    ModelGraph g = build_model({.arch = Arch::kMobileNetV2, .width = 1.0});
    const ProfileReport rep = emit_report(g);
    const struct { const char* name; int64_t c, d, h; } stage_ends[] = {
        {"block1.project.bn", 16, 16, 56}, {"block3.project.bn", 24, 8, 28},
        {"block6.project.bn", 32, 4, 14},  {"block10.residual", 64, 2, 7},
        {"block13.residual", 96, 2, 7},    {"block16.residual", 160, 1, 4},
        {"block17.project.bn", 320, 1, 4},
    };
    for (const auto& s : stage_ends) {
        bool found = false;
        for (const LayerRecord& l : rep.layers) {
            if (l.name == s.name) {
                found = true;
                CHECK(l.shape.c == s.c);
                CHECK(l.shape.d == s.d);
                CHECK(l.shape.h == s.h);
            }
        }
        INFO(s.name);
        CHECK(found);
    }
}
