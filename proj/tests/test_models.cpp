#include <doctest.h>

#include <map>
#include <stdexcept>

#include "e3d/analyzer.hpp"
#include "e3d/models.hpp"
#include "test_util.hpp"

using namespace e3d;

namespace {

struct Cell {
    const char* label;
    int64_t c, d, h, w;
};

/// Checks every recorded stage checkpoint against the expected output sizes.
void check_cells(const ModelGraph& g, const std::vector<Cell>& cells) {
    const auto shapes = infer_shapes(g);
    std::map<std::string, Shape5> by_label;
    for (const auto& [label, id] : g.checkpoints) by_label[label] = shapes[static_cast<size_t>(id)];
    for (const Cell& c : cells) {
        INFO(g.arch, " cell ", c.label);
        REQUIRE(by_label.count(c.label) == 1);
        const Shape5 got = by_label[c.label];
        CHECK(got.c == c.c);
        CHECK(got.d == c.d);
        CHECK(got.h == c.h);
        CHECK(got.w == c.w);
    }
}

} // namespace

TEST_CASE("squeezenet stage shapes") {
    ModelGraph g = build_model({.arch = Arch::kSqueezeNet, .width = 1.0});
    check_cells(g, {
        {"conv1", 64, 16, 56, 56},   {"maxpool1", 64, 8, 28, 28}, {"fire2", 128, 8, 28, 28},
        {"fire3", 128, 8, 28, 28},   {"maxpool3", 128, 4, 14, 14}, {"fire4", 256, 4, 14, 14},
        {"fire5", 256, 4, 14, 14},   {"maxpool5", 256, 2, 7, 7},  {"fire6", 384, 2, 7, 7},
        {"fire7", 384, 2, 7, 7},     {"maxpool7", 384, 1, 4, 4},  {"fire8", 512, 1, 4, 4},
        {"fire9", 512, 1, 4, 4},     {"conv10", 600, 1, 4, 4},    {"avgpool", 600, 1, 1, 1},
    });
}

TEST_CASE("mobilenet v1 stage shapes") {
    ModelGraph g = build_model({.arch = Arch::kMobileNetV1, .width = 1.0});
    check_cells(g, {
        {"conv1", 32, 16, 56, 56},  {"block1", 64, 8, 28, 28},   {"block2", 128, 4, 14, 14},
        {"block3", 128, 4, 14, 14}, {"block4", 256, 2, 7, 7},    {"block5", 256, 2, 7, 7},
        {"block6", 512, 1, 4, 4},   {"block7", 512, 1, 4, 4},    {"block8", 512, 1, 4, 4},
        {"block9", 512, 1, 4, 4},   {"block10", 512, 1, 4, 4},   {"block11", 512, 1, 4, 4},
        {"block12", 1024, 1, 4, 4}, {"block13", 1024, 1, 4, 4},  {"avgpool", 1024, 1, 1, 1},
        {"classifier", 600, 1, 1, 1},
    });
}

TEST_CASE("mobilenet v2 stage shapes") {
    ModelGraph g = build_model({.arch = Arch::kMobileNetV2, .width = 1.0});
    check_cells(g, {
        {"conv1", 32, 16, 56, 56},  {"block1", 16, 16, 56, 56}, {"block2", 24, 8, 28, 28},
        {"block3", 24, 8, 28, 28},  {"block4", 32, 4, 14, 14},  {"block6", 32, 4, 14, 14},
        {"block7", 64, 2, 7, 7},    {"block10", 64, 2, 7, 7},   {"block11", 96, 2, 7, 7},
        {"block13", 96, 2, 7, 7},   {"block14", 160, 1, 4, 4},  {"block16", 160, 1, 4, 4},
        {"block17", 320, 1, 4, 4},  {"conv_last", 1280, 1, 4, 4},
        {"avgpool", 1280, 1, 1, 1}, {"classifier", 600, 1, 1, 1},
    });
}

TEST_CASE("shufflenet v1 stage shapes") {
    ModelGraph g = build_model({.arch = Arch::kShuffleNetV1, .width = 1.0});
    check_cells(g, {
        {"conv1", 24, 16, 56, 56},        {"maxpool", 24, 8, 28, 28},
        {"stage2.unit0", 240, 4, 14, 14}, {"stage2.unit3", 240, 4, 14, 14},
        {"stage3.unit0", 480, 2, 7, 7},   {"stage3.unit7", 480, 2, 7, 7},
        {"stage4.unit0", 960, 1, 4, 4},   {"stage4.unit3", 960, 1, 4, 4},
        {"avgpool", 960, 1, 1, 1},        {"classifier", 600, 1, 1, 1},
    });
}

TEST_CASE("shufflenet v2 stage shapes and channel table") {
    ModelGraph g = build_model({.arch = Arch::kShuffleNetV2, .width = 1.0});
    check_cells(g, {
        {"conv1", 24, 16, 56, 56},        {"maxpool", 24, 8, 28, 28},
        {"stage2.unit0", 116, 4, 14, 14}, {"stage2.unit3", 116, 4, 14, 14},
        {"stage3.unit0", 232, 2, 7, 7},   {"stage3.unit7", 232, 2, 7, 7},
        {"stage4.unit0", 464, 1, 4, 4},   {"stage4.unit3", 464, 1, 4, 4},
        {"conv_last", 1024, 1, 4, 4},     {"avgpool", 1024, 1, 1, 1},
        {"classifier", 600, 1, 1, 1},
    });

    // 16 units split 4/8/4 across the three stages.
    int units = 0;
    for (const auto& [label, id] : g.checkpoints) {
        units += label.find("unit") != std::string::npos ? 1 : 0;
    }
    CHECK(units == 16);

    const struct { double w; int64_t c1, c2, c3, c4; } table[] = {
        {0.25, 32, 64, 128, 1024}, {0.5, 48, 96, 192, 1024}, {1.0, 116, 232, 464, 1024},
        {1.5, 176, 352, 704, 1024}, {2.0, 244, 488, 976, 2048},
    };
    for (const auto& row : table) {
        const auto ch = shufflenet_v2_channels(row.w);
        CHECK(ch.c1 == row.c1);
        CHECK(ch.c2 == row.c2);
        CHECK(ch.c3 == row.c3);
        CHECK(ch.c4 == row.c4);
    }
}

TEST_CASE("stem contract: every architecture halves H and W, keeps D") {
    for (Arch a : all_archs()) {
        ModelGraph g = build_model({.arch = a, .width = stock_widths(a)[0]});
        const Node* stem = nullptr;
        for (const Node& n : g.nodes) {
            if (n.kind == NodeKind::kConv) {
                stem = &n;
                break;
            }
        }
        REQUIRE(stem != nullptr);
        CHECK(stem->conv.stride == std::array<int64_t, 3>{1, 2, 2});
        CHECK(stem->out_shape.d == 16);
        CHECK(stem->out_shape.h == 56);
        CHECK(stem->out_shape.w == 56);
    }
}

TEST_CASE("mobilenet v1 at width 0.5 halves every channel") {
    ModelGraph g = build_model({.arch = Arch::kMobileNetV1, .width = 0.5});
    const auto shapes = infer_shapes(g);
    std::map<std::string, Shape5> by_label;
    for (const auto& [label, id] : g.checkpoints) by_label[label] = shapes[static_cast<size_t>(id)];
    CHECK(by_label["conv1"].c == 16);
    CHECK(by_label["block1"].c == 32);
    CHECK(by_label["block13"].c == 512);
}

TEST_CASE("width policy: stock sets enforced, override allows the rest") {
    CHECK_THROWS_AS(build_model({.arch = Arch::kMobileNetV1, .width = 0.75}),
                    std::invalid_argument);
    ModelGraph g = build_model({.arch = Arch::kMobileNetV1, .width = 0.75, .frames = 8,
                                .size = 32, .allow_any_width = true});
    CHECK(g.width == 0.75);

    // SqueezeNet has no multiplier at all.
    CHECK_THROWS_AS(build_model({.arch = Arch::kSqueezeNet, .width = 0.5}),
                    std::invalid_argument);
    ModelConfig sq{.arch = Arch::kSqueezeNet, .width = 0.5, .allow_any_width = true};
    CHECK_THROWS_AS(build_model(sq), std::invalid_argument);

    CHECK_THROWS_AS(build_model({.arch = Arch::kShuffleNetV2, .width = 1.0, .classes = 1}),
                    std::invalid_argument);
}

TEST_CASE("static shapes equal runtime shapes on every architecture") {
    for (Arch a : all_archs()) {
        const double w = stock_widths(a)[0];
        ModelGraph g = init_weights(
            build_model({.arch = a, .width = w, .classes = 11, .frames = 8, .size = 32}), 1);
        const auto shapes = infer_shapes(g);
        Tensor5 x = testutil::random_tensor({1, 3, 8, 32, 32}, 77);
        forward(g, x, {}, [&](const Node& n, const Tensor5& out) {
            const Shape5 want = shapes[static_cast<size_t>(n.id)];
            INFO(arch_name(a), " node ", n.name);
            CHECK(out.shape().c == want.c);
            CHECK(out.shape().d == want.d);
            CHECK(out.shape().h == want.h);
            CHECK(out.shape().w == want.w);
        });
    }
}
