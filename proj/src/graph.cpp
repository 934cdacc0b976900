#include "e3d/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace e3d {

const char* node_kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::kInput: return "input";
        case NodeKind::kConv: return "conv3d";
        case NodeKind::kBatchNorm: return "batchnorm";
        case NodeKind::kRelu: return "relu";
        case NodeKind::kRelu6: return "relu6";
        case NodeKind::kMaxPool: return "maxpool";
        case NodeKind::kAvgPool: return "avgpool";
        case NodeKind::kShuffle: return "shuffle";
        case NodeKind::kSlice: return "slice";
        case NodeKind::kConcat: return "concat";
        case NodeKind::kAdd: return "add";
        case NodeKind::kLinear: return "linear";
    }
    return "unknown";
}

GraphBuilder::GraphBuilder(Shape5 input_shape) : input_shape_(input_shape) {
    input_shape_.n = 1;
    Node in;
    in.id = 0;
    in.name = "input";
    in.kind = NodeKind::kInput;
    in.out_shape = input_shape_;
    nodes_.push_back(std::move(in));
    shapes_.push_back(input_shape_);
}

const Shape5& GraphBuilder::shape_of(int id) const {
    return shapes_.at(static_cast<size_t>(id));
}

int GraphBuilder::push(Node n, Shape5 out) {
    n.id = static_cast<int>(nodes_.size());
    n.out_shape = out;
    for (int in : n.inputs) {
        if (in < 0 || in >= n.id) throw std::logic_error("graph: inputs must precede the node");
    }
    nodes_.push_back(std::move(n));
    shapes_.push_back(out);
    return static_cast<int>(nodes_.size()) - 1;
}

int GraphBuilder::conv(const std::string& name, int input, ConvSpec spec) {
    spec.validate();
    const Shape5 in = shape_of(input);
    if (in.c != spec.in_ch) {
        throw std::invalid_argument("graph conv " + name + ": input channels " +
                                    std::to_string(in.c) + " != spec in_ch " +
                                    std::to_string(spec.in_ch));
    }
    Node n;
    n.name = name;
    n.kind = NodeKind::kConv;
    n.inputs = {input};
    n.conv = spec;
    n.weight = Tensor5(spec.weight_shape());
    if (spec.has_bias) n.bias.assign(static_cast<size_t>(spec.out_ch), 0.0f);
    return push(std::move(n), conv_output_shape(in, spec));
}

int GraphBuilder::batchnorm(const std::string& name, int input) {
    const Shape5 in = shape_of(input);
    Node n;
    n.name = name;
    n.kind = NodeKind::kBatchNorm;
    n.inputs = {input};
    n.bn = BatchNormParams::identity(in.c);
    return push(std::move(n), in);
}

int GraphBuilder::relu(const std::string& name, int input) {
    Node n;
    n.name = name;
    n.kind = NodeKind::kRelu;
    n.inputs = {input};
    return push(std::move(n), shape_of(input));
}

int GraphBuilder::relu6(const std::string& name, int input) {
    Node n;
    n.name = name;
    n.kind = NodeKind::kRelu6;
    n.inputs = {input};
    return push(std::move(n), shape_of(input));
}

int GraphBuilder::maxpool(const std::string& name, int input, PoolSpec spec) {
    spec.kind = PoolKind::kMax;
    Node n;
    n.name = name;
    n.kind = NodeKind::kMaxPool;
    n.inputs = {input};
    n.pool = spec;
    return push(std::move(n), pool_output_shape(shape_of(input), spec));
}

int GraphBuilder::avgpool(const std::string& name, int input, PoolSpec spec) {
    spec.kind = PoolKind::kAvg;
    Node n;
    n.name = name;
    n.kind = NodeKind::kAvgPool;
    n.inputs = {input};
    n.pool = spec;
    return push(std::move(n), pool_output_shape(shape_of(input), spec));
}

int GraphBuilder::global_avgpool(const std::string& name, int input) {
    const Shape5 in = shape_of(input);
    PoolSpec spec{.kind = PoolKind::kAvg, .kernel = {in.d, in.h, in.w}, .stride = {1, 1, 1},
                  .padding = {0, 0, 0}};
    return avgpool(name, input, spec);
}

int GraphBuilder::shuffle(const std::string& name, int input, int64_t groups) {
    const Shape5 in = shape_of(input);
    if (groups < 1 || in.c % groups != 0) {
        throw std::invalid_argument("graph shuffle " + name + ": channels not divisible by groups");
    }
    Node n;
    n.name = name;
    n.kind = NodeKind::kShuffle;
    n.inputs = {input};
    n.shuffle_groups = groups;
    return push(std::move(n), in);
}

int GraphBuilder::slice(const std::string& name, int input, int64_t begin, int64_t end) {
    const Shape5 in = shape_of(input);
    if (begin < 0 || end <= begin || end > in.c) {
        throw std::invalid_argument("graph slice " + name + ": bad channel range");
    }
    Node n;
    n.name = name;
    n.kind = NodeKind::kSlice;
    n.inputs = {input};
    n.slice_begin = begin;
    n.slice_end = end;
    Shape5 out = in;
    out.c = end - begin;
    return push(std::move(n), out);
}

int GraphBuilder::concat(const std::string& name, int a, int b) {
    const Shape5 sa = shape_of(a);
    const Shape5 sb = shape_of(b);
    if (sa.d != sb.d || sa.h != sb.h || sa.w != sb.w) {
        throw std::invalid_argument("graph concat " + name + ": spatial dims differ");
    }
    Node n;
    n.name = name;
    n.kind = NodeKind::kConcat;
    n.inputs = {a, b};
    Shape5 out = sa;
    out.c = sa.c + sb.c;
    return push(std::move(n), out);
}

int GraphBuilder::add(const std::string& name, int a, int b) {
    if (!(shape_of(a) == shape_of(b))) {
        throw std::invalid_argument("graph add " + name + ": shapes differ");
    }
    Node n;
    n.name = name;
    n.kind = NodeKind::kAdd;
    n.inputs = {a, b};
    return push(std::move(n), shape_of(a));
}

int GraphBuilder::linear(const std::string& name, int input, int64_t out_features) {
    const Shape5 in = shape_of(input);
    if (in.d != 1 || in.h != 1 || in.w != 1) {
        throw std::invalid_argument("graph linear " + name + ": input must be pooled to 1x1x1");
    }
    Node n;
    n.name = name;
    n.kind = NodeKind::kLinear;
    n.inputs = {input};
    n.linear_in = in.c;
    n.linear_out = out_features;
    n.weight = Tensor5({out_features, in.c, 1, 1, 1});
    n.bias.assign(static_cast<size_t>(out_features), 0.0f);
    Shape5 out = in;
    out.c = out_features;
    return push(std::move(n), out);
}

void GraphBuilder::checkpoint(const std::string& label, int id) {
    checkpoints_.emplace_back(label, id);
}

ModelGraph GraphBuilder::finish(std::string arch, double width, int64_t classes) && {
    ModelGraph g;
    g.arch = std::move(arch);
    g.width = width;
    g.classes = classes;
    g.input_shape = input_shape_;
    g.nodes = std::move(nodes_);
    g.checkpoints = std::move(checkpoints_);
    return g;
}

uint64_t SplitMix64::next() {
    state += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

float SplitMix64::next_unit() {
    const uint64_t bits = next() >> 40; // top 24 bits
    return static_cast<float>(bits) * (1.0f / 8388608.0f) - 1.0f;
}

ModelGraph init_weights(ModelGraph graph, uint64_t seed) {
    SplitMix64 rng(seed);
    for (Node& n : graph.nodes) {
        if (n.kind == NodeKind::kConv) {
            const auto& k = n.conv.kernel;
            const int64_t fan_in = (n.conv.in_ch / n.conv.groups) * k[0] * k[1] * k[2];
            const float scale = 1.0f / std::sqrt(static_cast<float>(fan_in));
            for (int64_t i = 0; i < n.weight.size(); ++i) {
                n.weight.data()[i] = rng.next_unit() * scale;
            }
            if (!n.bias.empty()) std::fill(n.bias.begin(), n.bias.end(), 0.0f);
        } else if (n.kind == NodeKind::kLinear) {
            const float scale = 1.0f / std::sqrt(static_cast<float>(n.linear_in));
            for (int64_t i = 0; i < n.weight.size(); ++i) {
                n.weight.data()[i] = rng.next_unit() * scale;
            }
            std::fill(n.bias.begin(), n.bias.end(), 0.0f);
        } else if (n.kind == NodeKind::kBatchNorm) {
            n.bn = BatchNormParams::identity(static_cast<int64_t>(n.bn.gamma.size()));
        }
    }
    graph.init_seed = seed;
    graph.initialized = true;
    return graph;
}

namespace {

Tensor5 slice_channels(const Tensor5& x, int64_t begin, int64_t end) {
    const Shape5 s = x.shape();
    Tensor5 out({s.n, end - begin, s.d, s.h, s.w});
    const int64_t spatial = s.d * s.h * s.w;
    for (int64_t n = 0; n < s.n; ++n) {
        const float* src = x.data() + (n * s.c + begin) * spatial;
        float* dst = out.data() + n * (end - begin) * spatial;
        std::copy(src, src + (end - begin) * spatial, dst);
    }
    return out;
}

Tensor5 linear_forward(const Tensor5& x, const Node& n) {
    const Shape5 s = x.shape();
    if (s.c != n.linear_in || s.d != 1 || s.h != 1 || s.w != 1) {
        throw std::invalid_argument("linear " + n.name + ": input shape " + s.str() +
                                    " does not match (n," + std::to_string(n.linear_in) +
                                    ",1,1,1)");
    }
    Tensor5 out({s.n, n.linear_out, 1, 1, 1});
    const float* w = n.weight.data();
    for (int64_t b = 0; b < s.n; ++b) {
        const float* xi = x.data() + b * n.linear_in;
        float* yo = out.data() + b * n.linear_out;
        for (int64_t o = 0; o < n.linear_out; ++o) {
            float acc = n.bias[static_cast<size_t>(o)];
            const float* wr = w + o * n.linear_in;
            for (int64_t i = 0; i < n.linear_in; ++i) acc += wr[i] * xi[i];
            yo[o] = acc;
        }
    }
    return out;
}

} // namespace

Tensor5 forward(const ModelGraph& graph, const Tensor5& input, const ExecContext& ctx,
                const std::function<void(const Node&, const Tensor5&)>& tap) {
    const Shape5 in = input.shape();
    const Shape5 want = graph.input_shape;
    if (in.c != want.c || in.d != want.d || in.h != want.h || in.w != want.w) {
        throw std::invalid_argument("forward: input shape " + in.str() +
                                    " does not match model input " + want.str());
    }
    if (!graph.initialized) {
        throw std::logic_error("forward: graph weights are not initialized");
    }

    // Free intermediate tensors as soon as the last consumer has run.
    std::vector<int> remaining(graph.nodes.size(), 0);
    for (const Node& n : graph.nodes) {
        for (int i : n.inputs) remaining[static_cast<size_t>(i)]++;
    }
    remaining[static_cast<size_t>(graph.sink())]++;

    std::vector<Tensor5> values(graph.nodes.size());
    for (const Node& n : graph.nodes) {
        Tensor5 out;
        switch (n.kind) {
            case NodeKind::kInput: out = input; break;
            case NodeKind::kConv:
                out = conv3d(values[static_cast<size_t>(n.inputs[0])], n.weight, n.bias, n.conv, ctx);
                break;
            case NodeKind::kBatchNorm:
                out = batchnorm_infer(values[static_cast<size_t>(n.inputs[0])], n.bn, ctx);
                break;
            case NodeKind::kRelu: out = relu(values[static_cast<size_t>(n.inputs[0])], ctx); break;
            case NodeKind::kRelu6: out = relu6(values[static_cast<size_t>(n.inputs[0])], ctx); break;
            case NodeKind::kMaxPool:
            case NodeKind::kAvgPool:
                out = pool3d(values[static_cast<size_t>(n.inputs[0])], n.pool, ctx);
                break;
            case NodeKind::kShuffle:
                out = channel_shuffle(values[static_cast<size_t>(n.inputs[0])], n.shuffle_groups);
                break;
            case NodeKind::kSlice:
                out = slice_channels(values[static_cast<size_t>(n.inputs[0])], n.slice_begin,
                                     n.slice_end);
                break;
            case NodeKind::kConcat:
                out = concat_channels(values[static_cast<size_t>(n.inputs[0])],
                                      values[static_cast<size_t>(n.inputs[1])]);
                break;
            case NodeKind::kAdd:
                out = add_elementwise(values[static_cast<size_t>(n.inputs[0])],
                                      values[static_cast<size_t>(n.inputs[1])], ctx);
                break;
            case NodeKind::kLinear:
                out = linear_forward(values[static_cast<size_t>(n.inputs[0])], n);
                break;
        }
        if (tap) tap(n, out);
        values[static_cast<size_t>(n.id)] = std::move(out);
        for (int i : n.inputs) {
            if (--remaining[static_cast<size_t>(i)] == 0) values[static_cast<size_t>(i)] = Tensor5();
        }
    }
    return std::move(values[static_cast<size_t>(graph.sink())]);
}

std::vector<std::vector<float>> scores_from_output(const Tensor5& out) {
    const Shape5 s = out.shape();
    std::vector<std::vector<float>> rows(static_cast<size_t>(s.n));
    for (int64_t n = 0; n < s.n; ++n) {
        rows[static_cast<size_t>(n)].assign(out.data() + n * s.c, out.data() + (n + 1) * s.c);
    }
    return rows;
}

} // namespace e3d
