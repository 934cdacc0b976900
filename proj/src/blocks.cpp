#include "e3d/blocks.hpp"

#include <stdexcept>

namespace e3d {

const char* block_family_name(BlockFamily f) {
    switch (f) {
        case BlockFamily::kFire: return "fire";
        case BlockFamily::kMobileNetV1: return "mobilenet_v1";
        case BlockFamily::kMobileNetV2: return "mobilenet_v2";
        case BlockFamily::kShuffleNetV1: return "shufflenet_v1";
        case BlockFamily::kShuffleNetV2: return "shufflenet_v2";
    }
    return "unknown";
}

void BlockSpec::validate() const {
    if (in_ch < 1 || out_ch < 1) throw std::invalid_argument("block: channel counts must be >= 1");
    if (stride != 1 && stride != 2) throw std::invalid_argument("block: stride must be 1 or 2");
    switch (family) {
        case BlockFamily::kFire:
            if (squeeze_ch < 1 || expand1_ch < 1 || expand3_ch < 1) {
                throw std::invalid_argument("fire: squeeze/expand widths must be >= 1");
            }
            if (expand1_ch + expand3_ch != out_ch) {
                throw std::invalid_argument("fire: expand1_ch + expand3_ch must equal out_ch");
            }
            if (bypass && (in_ch != out_ch || stride != 1)) {
                throw std::invalid_argument("fire: bypass requires in_ch == out_ch and stride 1");
            }
            if (stride != 1) throw std::invalid_argument("fire: block is always stride 1");
            break;
        case BlockFamily::kMobileNetV1:
            break;
        case BlockFamily::kMobileNetV2:
            if (expansion < 1) throw std::invalid_argument("mobilenet_v2: expansion must be >= 1");
            break;
        case BlockFamily::kShuffleNetV1:
            if (groups < 1) throw std::invalid_argument("shufflenet_v1: groups must be >= 1");
            if (stride == 2 && out_ch <= in_ch) {
                throw std::invalid_argument(
                    "shufflenet_v1: stride-2 unit needs out_ch > in_ch (conv branch emits "
                    "out_ch - in_ch channels)");
            }
            if (stride == 1 && in_ch != out_ch) {
                throw std::invalid_argument("shufflenet_v1: stride-1 unit requires in_ch == out_ch");
            }
            break;
        case BlockFamily::kShuffleNetV2:
            if (stride == 1) {
                if (in_ch != out_ch) {
                    throw std::invalid_argument(
                        "shufflenet_v2: stride-1 unit requires in_ch == out_ch");
                }
                if (in_ch % 2 != 0) {
                    throw std::invalid_argument("shufflenet_v2: stride-1 unit needs even channels");
                }
            } else if (out_ch % 2 != 0) {
                throw std::invalid_argument("shufflenet_v2: out_ch must be even");
            }
            break;
    }
}

namespace {

ConvSpec pointwise(int64_t in, int64_t out, int64_t groups = 1) {
    return ConvSpec{.in_ch = in, .out_ch = out, .kernel = {1, 1, 1}, .stride = {1, 1, 1},
                    .padding = {0, 0, 0}, .groups = groups};
}

ConvSpec conv3x3(int64_t in, int64_t out, int64_t stride, int64_t groups = 1) {
    return ConvSpec{.in_ch = in, .out_ch = out, .kernel = {3, 3, 3},
                    .stride = {stride, stride, stride}, .padding = {1, 1, 1}, .groups = groups};
}

/// conv -> BN, optionally ReLU/ReLU6.
int conv_bn(GraphBuilder& b, int input, const std::string& name, const ConvSpec& spec,
            int act /*0 none, 1 relu, 2 relu6*/) {
    int id = b.conv(name, input, spec);
    id = b.batchnorm(name + ".bn", id);
    if (act == 1) id = b.relu(name + ".relu", id);
    if (act == 2) id = b.relu6(name + ".relu6", id);
    return id;
}

int append_fire(GraphBuilder& b, int input, const BlockSpec& s, const std::string& p) {
    int sq = conv_bn(b, input, p + ".squeeze", pointwise(s.in_ch, s.squeeze_ch), 1);
    int e1 = b.conv(p + ".expand1", sq, pointwise(s.squeeze_ch, s.expand1_ch));
    e1 = b.batchnorm(p + ".expand1.bn", e1);
    int e3 = b.conv(p + ".expand3", sq, conv3x3(s.squeeze_ch, s.expand3_ch, 1));
    e3 = b.batchnorm(p + ".expand3.bn", e3);
    int out = b.concat(p + ".concat", e1, e3);
    if (s.bypass) out = b.add(p + ".bypass", out, input);
    return b.relu(p + ".relu", out);
}

int append_mobilenet_v1(GraphBuilder& b, int input, const BlockSpec& s, const std::string& p) {
    int dw = conv_bn(b, input, p + ".dw", conv3x3(s.in_ch, s.in_ch, s.stride, s.in_ch), 1);
    return conv_bn(b, dw, p + ".pw", pointwise(s.in_ch, s.out_ch), 1);
}

int append_mobilenet_v2(GraphBuilder& b, int input, const BlockSpec& s, const std::string& p) {
    const int64_t hidden = s.in_ch * s.expansion;
    int cur = input;
    if (s.expansion > 1) {
        cur = conv_bn(b, cur, p + ".expand", pointwise(s.in_ch, hidden), 2);
    }
    cur = conv_bn(b, cur, p + ".dw", conv3x3(hidden, hidden, s.stride, hidden), 2);
    // Linear bottleneck: the projection carries no activation.
    cur = conv_bn(b, cur, p + ".project", pointwise(hidden, s.out_ch), 0);
    if (s.stride == 1 && s.in_ch == s.out_ch) {
        cur = b.add(p + ".residual", cur, input);
    }
    return cur;
}

int append_shufflenet_v1(GraphBuilder& b, int input, const BlockSpec& s, const std::string& p) {
    const int64_t branch_out = s.stride == 2 ? s.out_ch - s.in_ch : s.out_ch;
    // Bottleneck width is a quarter of the full block output, kept a multiple
    // of the group count.
    int64_t mid = s.out_ch / 4;
    if (mid % s.groups != 0) mid += s.groups - mid % s.groups;
    if (mid < s.groups) mid = s.groups;
    const int64_t g1 = s.grouped_first_pointwise ? s.groups : 1;

    int cur = conv_bn(b, input, p + ".pw1", pointwise(s.in_ch, mid, g1), 1);
    cur = b.shuffle(p + ".shuffle", cur, s.groups);
    cur = conv_bn(b, cur, p + ".dw", conv3x3(mid, mid, s.stride, mid), 0);
    cur = conv_bn(b, cur, p + ".pw2", pointwise(mid, branch_out, s.groups), 0);
    if (s.stride == 1) {
        cur = b.add(p + ".add", cur, input);
    } else {
        PoolSpec pool{.kind = PoolKind::kAvg, .kernel = {3, 3, 3}, .stride = {2, 2, 2},
                      .padding = {1, 1, 1}};
        int shortcut = b.avgpool(p + ".shortcut", input, pool);
        cur = b.concat(p + ".concat", cur, shortcut);
    }
    return b.relu(p + ".relu", cur);
}

int active_branch_v2(GraphBuilder& b, int input, int64_t in_ch, int64_t out_ch, int64_t stride,
                     const std::string& p) {
    int cur = conv_bn(b, input, p + ".pw1", pointwise(in_ch, out_ch), 1);
    cur = conv_bn(b, cur, p + ".dw", conv3x3(out_ch, out_ch, stride, out_ch), 0);
    return conv_bn(b, cur, p + ".pw2", pointwise(out_ch, out_ch), 1);
}

int append_shufflenet_v2(GraphBuilder& b, int input, const BlockSpec& s, const std::string& p) {
    const int64_t half = s.out_ch / 2;
    int out;
    if (s.stride == 1) {
        int keep = b.slice(p + ".split_a", input, 0, half);
        int active_in = b.slice(p + ".split_b", input, half, s.in_ch);
        int branch = active_branch_v2(b, active_in, half, half, 1, p + ".b2");
        out = b.concat(p + ".concat", keep, branch);
    } else {
        int left = conv_bn(b, input, p + ".b1.dw", conv3x3(s.in_ch, s.in_ch, 2, s.in_ch), 0);
        left = conv_bn(b, left, p + ".b1.pw", pointwise(s.in_ch, half), 1);
        int right = active_branch_v2(b, input, s.in_ch, half, 2, p + ".b2");
        out = b.concat(p + ".concat", left, right);
    }
    return b.shuffle(p + ".shuffle", out, 2);
}

} // namespace

int append_block(GraphBuilder& b, int input, const BlockSpec& spec, const std::string& prefix) {
    spec.validate();
    const Shape5 in = b.shape_of(input);
    if (in.c != spec.in_ch) {
        throw std::invalid_argument("block " + prefix + ": input has " + std::to_string(in.c) +
                                    " channels, spec expects " + std::to_string(spec.in_ch));
    }
    switch (spec.family) {
        case BlockFamily::kFire: return append_fire(b, input, spec, prefix);
        case BlockFamily::kMobileNetV1: return append_mobilenet_v1(b, input, spec, prefix);
        case BlockFamily::kMobileNetV2: return append_mobilenet_v2(b, input, spec, prefix);
        case BlockFamily::kShuffleNetV1: return append_shufflenet_v1(b, input, spec, prefix);
        case BlockFamily::kShuffleNetV2: return append_shufflenet_v2(b, input, spec, prefix);
    }
    throw std::logic_error("block: unknown family");
}

ModelGraph make_block_graph(const BlockSpec& spec, Shape5 input_shape) {
    GraphBuilder b(input_shape);
    append_block(b, b.input_id(), spec, "block");
    return std::move(b).finish(std::string("block:") + block_family_name(spec.family), 1.0,
                               spec.out_ch);
}

} // namespace e3d
