#include "e3d/verify.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "e3d/blocks.hpp"
#include "e3d/graph.hpp"
#include "e3d/ops.hpp"

namespace e3d {

namespace {

struct Check {
    const VerifyOptions& opts;
    VerifyResult& result;

    bool close(float a, float b) const {
        const float diff = std::fabs(a - b);
        const float scale = std::max(std::fabs(a), std::fabs(b));
        return diff <= std::max(opts.abs_tol, opts.rel_tol * scale);
    }

    void tensors(const std::string& what, const Tensor5& got, const Tensor5& want) {
        ++result.checks;
        if (!(got.shape() == want.shape())) {
            ++result.failures;
            result.messages.push_back(what + ": shape " + got.shape().str() + " != " +
                                      want.shape().str());
            return;
        }
        for (int64_t i = 0; i < got.size(); ++i) {
            if (!close(got.data()[i], want.data()[i])) {
                ++result.failures;
                std::ostringstream os;
                os << what << ": element " << i << " diverges: " << got.data()[i]
                   << " vs " << want.data()[i];
                result.messages.push_back(os.str());
                return;
            }
        }
    }

    void that(const std::string& what, bool ok) {
        ++result.checks;
        if (!ok) {
            ++result.failures;
            result.messages.push_back(what);
        }
    }
};

Tensor5 rand_tensor(std::mt19937_64& rng, Shape5 shape, float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> dist(lo, hi);
    Tensor5 t(shape);
    for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
    return t;
}

std::vector<float> rand_vec(std::mt19937_64& rng, int64_t n, float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> dist(lo, hi);
    std::vector<float> v(static_cast<size_t>(n));
    for (auto& x : v) x = dist(rng);
    return v;
}

std::vector<Backend> optimized_backends() {
    std::vector<Backend> b{Backend::kScalar};
    if (avx2_available()) b.push_back(Backend::kAvx2);
    return b;
}

void verify_conv(const VerifyOptions& opts, Check& chk) {
    std::mt19937_64 rng(opts.seed * 11 + 1);
    std::uniform_int_distribution<int64_t> dim(1, 8);
    std::uniform_int_distribution<int64_t> ch_pick(0, 2);
    std::uniform_int_distribution<int> kpick(0, 1);
    std::uniform_int_distribution<int> coin(0, 1);
    const auto backends = optimized_backends();

    for (int c = 0; c < opts.cases; ++c) {
        // groups in {1, 2, channels}; channels a multiple of the pick
        const int64_t gsel = ch_pick(rng);
        int64_t groups = gsel == 0 ? 1 : 2;
        std::uniform_int_distribution<int64_t> mult(1, 4);
        int64_t in_ch = gsel == 0 ? dim(rng) : 2 * mult(rng);
        int64_t out_ch = gsel == 0 ? dim(rng) : 2 * mult(rng);
        if (gsel == 2) {
            groups = in_ch;
            out_ch = in_ch; // depthwise
        }
        const int64_t k = kpick(rng) == 0 ? 1 : 3;
        const int64_t stride = coin(rng) == 0 ? 1 : 2;
        const int64_t pad = k == 3 ? 1 : 0;
        const bool with_bias = coin(rng) == 1;

        Shape5 in{coin(rng) == 0 ? 1 : 2, in_ch, dim(rng), dim(rng), dim(rng)};
        // keep the window inside the padded input
        in.d = std::max(in.d, k - 2 * pad);
        in.h = std::max(in.h, k - 2 * pad);
        in.w = std::max(in.w, k - 2 * pad);

        ConvSpec spec{.in_ch = in_ch, .out_ch = out_ch, .kernel = {k, k, k},
                      .stride = {stride, stride, stride}, .padding = {pad, pad, pad},
                      .groups = groups, .has_bias = with_bias};
        const Tensor5 x = rand_tensor(rng, in);
        const Tensor5 w = rand_tensor(rng, spec.weight_shape());
        const std::vector<float> bias = with_bias ? rand_vec(rng, out_ch) : std::vector<float>{};

        const Tensor5 want = ref::conv3d(x, w, bias, spec);
        for (Backend b : backends) {
            const Tensor5 got = conv3d(x, w, bias, spec, {.backend = b, .threads = opts.threads});
            chk.tensors(std::string("conv3d[") + backend_name(b) + "] case " + std::to_string(c),
                        got, want);
        }
    }
}

void verify_pool(const VerifyOptions& opts, Check& chk) {
    std::mt19937_64 rng(opts.seed * 11 + 2);
    std::uniform_int_distribution<int64_t> dim(2, 8);
    std::uniform_int_distribution<int64_t> kdist(1, 3);
    std::uniform_int_distribution<int> coin(0, 1);
    const auto backends = optimized_backends();

    for (int c = 0; c < opts.cases; ++c) {
        const int64_t k = kdist(rng);
        const int64_t stride = coin(rng) == 0 ? 1 : 2;
        const int64_t pad = k > 1 && coin(rng) == 1 ? 1 : 0;
        PoolSpec spec{.kind = coin(rng) == 0 ? PoolKind::kMax : PoolKind::kAvg,
                      .kernel = {k, k, k}, .stride = {stride, stride, stride},
                      .padding = {pad, pad, pad}};
        const Shape5 in{coin(rng) == 0 ? 1 : 2, dim(rng), std::max(dim(rng), k), std::max(dim(rng), k),
                        std::max(dim(rng), k)};
        const Tensor5 x = rand_tensor(rng, in);
        const Tensor5 want = ref::pool3d(x, spec);
        for (Backend b : backends) {
            const Tensor5 got = pool3d(x, spec, {.backend = b, .threads = opts.threads});
            chk.tensors(std::string("pool3d[") + backend_name(b) + "] case " + std::to_string(c),
                        got, want);
        }
    }
}

void verify_elementwise(const VerifyOptions& opts, Check& chk) {
    std::mt19937_64 rng(opts.seed * 11 + 3);
    std::uniform_int_distribution<int64_t> dim(1, 8);
    const auto backends = optimized_backends();

    for (int c = 0; c < opts.cases; ++c) {
        const Shape5 s{1, dim(rng), dim(rng), dim(rng), dim(rng)};
        const Tensor5 x = rand_tensor(rng, s, -8.0f, 8.0f);
        const Tensor5 y = rand_tensor(rng, s, -8.0f, 8.0f);

        BatchNormParams p;
        p.gamma = rand_vec(rng, s.c);
        p.beta = rand_vec(rng, s.c);
        p.mean = rand_vec(rng, s.c);
        p.var = rand_vec(rng, s.c, 0.05f, 2.0f);

        const Tensor5 want_bn = ref::batchnorm_infer(x, p);
        const Tensor5 want_relu = ref::relu(x);
        const Tensor5 want_relu6 = ref::relu6(x);
        const Tensor5 want_add = ref::add_elementwise(x, y);
        for (Backend b : backends) {
            const ExecContext ctx{.backend = b, .threads = opts.threads};
            chk.tensors(std::string("batchnorm[") + backend_name(b) + "] case " + std::to_string(c),
                        batchnorm_infer(x, p, ctx), want_bn);
            chk.tensors(std::string("relu[") + backend_name(b) + "]", relu(x, ctx), want_relu);
            chk.tensors(std::string("relu6[") + backend_name(b) + "]", relu6(x, ctx), want_relu6);
            chk.tensors(std::string("add[") + backend_name(b) + "]", add_elementwise(x, y, ctx),
                        want_add);
        }
    }
}

void verify_movement(const VerifyOptions& opts, Check& chk) {
    std::mt19937_64 rng(opts.seed * 11 + 4);
    std::uniform_int_distribution<int64_t> dim(1, 8);
    std::uniform_int_distribution<int64_t> gdist(1, 4);

    for (int c = 0; c < opts.cases; ++c) {
        const int64_t g = gdist(rng);
        const int64_t per = gdist(rng);
        const Shape5 s{1, g * per, dim(rng), dim(rng), dim(rng)};
        const Tensor5 x = rand_tensor(rng, s);

        // Shuffle is the reshape-transpose permutation and an involution
        // under the swapped group count.
        const Tensor5 y = channel_shuffle(x, g);
        bool perm_ok = true;
        const int64_t spatial = s.d * s.h * s.w;
        for (int64_t ch = 0; ch < s.c && perm_ok; ++ch) {
            const int64_t dst = (ch % per) * g + ch / per;
            for (int64_t i = 0; i < spatial; ++i) {
                if (y.data()[dst * spatial + i] != x.data()[ch * spatial + i]) {
                    perm_ok = false;
                    break;
                }
            }
        }
        chk.that("shuffle permutation case " + std::to_string(c), perm_ok);
        const Tensor5 back = channel_shuffle(y, per);
        bool inv_ok = true;
        for (int64_t i = 0; i < x.size(); ++i) {
            if (back.data()[i] != x.data()[i]) {
                inv_ok = false;
                break;
            }
        }
        chk.that("shuffle involution case " + std::to_string(c), inv_ok);

        if (s.c >= 2) {
            std::uniform_int_distribution<int64_t> split(1, s.c - 1);
            const int64_t at = split(rng);
            auto [a, b] = channel_split(x, at);
            const Tensor5 joined = concat_channels(a, b);
            bool rt = true;
            for (int64_t i = 0; i < x.size(); ++i) {
                if (joined.data()[i] != x.data()[i]) {
                    rt = false;
                    break;
                }
            }
            chk.that("split/concat round-trip case " + std::to_string(c), rt);
        }
    }
}

void verify_softmax(const VerifyOptions& opts, Check& chk) {
    std::mt19937_64 rng(opts.seed * 11 + 5);
    std::uniform_int_distribution<int64_t> len(1, 64);
    for (int c = 0; c < opts.cases; ++c) {
        const auto v = rand_vec(rng, len(rng), -6.0f, 6.0f);
        const auto p = softmax(v);
        long double m = v[0];
        for (float s : v) m = std::max<long double>(m, s);
        long double z = 0;
        for (float s : v) z += expl(static_cast<long double>(s) - m);
        bool ok = true;
        long double sum = 0;
        for (size_t i = 0; i < v.size(); ++i) {
            const auto want = static_cast<float>(expl(static_cast<long double>(v[i]) - m) / z);
            const float diff = std::fabs(p[i] - want);
            if (diff > std::max(1e-7f, 1e-6f * want)) ok = false;
            sum += p[i];
        }
        chk.that("softmax formula case " + std::to_string(c), ok);
        chk.that("softmax normalization case " + std::to_string(c),
                 std::fabs(static_cast<double>(sum) - 1.0) < 1e-6);
    }
}

// ---- block composition oracles -------------------------------------------

const Node& node_by_name(const ModelGraph& g, const std::string& name) {
    for (const Node& n : g.nodes) {
        if (n.name == name) return n;
    }
    throw std::logic_error("verify: node not found: " + name);
}

Tensor5 ref_conv_bn(const ModelGraph& g, const std::string& name, const Tensor5& x,
                    int act /*0 none, 1 relu, 2 relu6*/) {
    const Node& conv = node_by_name(g, name);
    const Node& bn = node_by_name(g, name + ".bn");
    Tensor5 out = ref::conv3d(x, conv.weight, conv.bias, conv.conv);
    out = ref::batchnorm_infer(out, bn.bn);
    if (act == 1) out = ref::relu(out);
    if (act == 2) out = ref::relu6(out);
    return out;
}

Tensor5 compose_fire(const ModelGraph& g, const BlockSpec& s, const Tensor5& x) {
    Tensor5 sq = ref_conv_bn(g, "block.squeeze", x, 1);
    Tensor5 e1 = ref_conv_bn(g, "block.expand1", sq, 0);
    Tensor5 e3 = ref_conv_bn(g, "block.expand3", sq, 0);
    Tensor5 out = concat_channels(e1, e3);
    if (s.bypass) out = ref::add_elementwise(out, x);
    return ref::relu(out);
}

Tensor5 compose_mobilenet_v1(const ModelGraph& g, const BlockSpec&, const Tensor5& x) {
    Tensor5 dw = ref_conv_bn(g, "block.dw", x, 1);
    return ref_conv_bn(g, "block.pw", dw, 1);
}

Tensor5 compose_mobilenet_v2(const ModelGraph& g, const BlockSpec& s, const Tensor5& x) {
    Tensor5 cur = x;
    if (s.expansion > 1) cur = ref_conv_bn(g, "block.expand", cur, 2);
    cur = ref_conv_bn(g, "block.dw", cur, 2);
    cur = ref_conv_bn(g, "block.project", cur, 0);
    if (s.stride == 1 && s.in_ch == s.out_ch) cur = ref::add_elementwise(cur, x);
    return cur;
}

Tensor5 compose_shufflenet_v1(const ModelGraph& g, const BlockSpec& s, const Tensor5& x) {
    Tensor5 cur = ref_conv_bn(g, "block.pw1", x, 1);
    cur = channel_shuffle(cur, s.groups);
    cur = ref_conv_bn(g, "block.dw", cur, 0);
    cur = ref_conv_bn(g, "block.pw2", cur, 0);
    if (s.stride == 1) {
        cur = ref::add_elementwise(cur, x);
    } else {
        PoolSpec pool{.kind = PoolKind::kAvg, .kernel = {3, 3, 3}, .stride = {2, 2, 2},
                      .padding = {1, 1, 1}};
        cur = concat_channels(cur, ref::pool3d(x, pool));
    }
    return ref::relu(cur);
}

Tensor5 compose_shufflenet_v2(const ModelGraph& g, const BlockSpec& s, const Tensor5& x) {
    Tensor5 merged;
    if (s.stride == 1) {
        auto [keep, active] = channel_split(x, s.out_ch / 2);
        Tensor5 cur = ref_conv_bn(g, "block.b2.pw1", active, 1);
        cur = ref_conv_bn(g, "block.b2.dw", cur, 0);
        cur = ref_conv_bn(g, "block.b2.pw2", cur, 1);
        merged = concat_channels(keep, cur);
    } else {
        Tensor5 left = ref_conv_bn(g, "block.b1.dw", x, 0);
        left = ref_conv_bn(g, "block.b1.pw", left, 1);
        Tensor5 right = ref_conv_bn(g, "block.b2.pw1", x, 1);
        right = ref_conv_bn(g, "block.b2.dw", right, 0);
        right = ref_conv_bn(g, "block.b2.pw2", right, 1);
        merged = concat_channels(left, right);
    }
    return channel_shuffle(merged, 2);
}

void verify_blocks(const VerifyOptions& opts, Check& chk) {
    std::mt19937_64 rng(opts.seed * 11 + 6);
    std::uniform_int_distribution<int64_t> dim(3, 6);
    const auto backends = optimized_backends();

    struct Case {
        BlockSpec spec;
        Shape5 in;
    };
    auto make_cases = [&](int i) {
        std::vector<Case> cases;
        const int64_t d = dim(rng), h = dim(rng), w = dim(rng);
        // fire
        cases.push_back({BlockSpec{.family = BlockFamily::kFire, .in_ch = 8, .out_ch = 12,
                                   .stride = 1, .squeeze_ch = 4, .expand1_ch = 6, .expand3_ch = 6,
                                   .bypass = false},
                         {1, 8, d, h, w}});
        cases.push_back({BlockSpec{.family = BlockFamily::kFire, .in_ch = 12, .out_ch = 12,
                                   .stride = 1, .squeeze_ch = 4, .expand1_ch = 6, .expand3_ch = 6,
                                   .bypass = true},
                         {1, 12, d, h, w}});
        // mobilenet v1
        cases.push_back({BlockSpec{.family = BlockFamily::kMobileNetV1, .in_ch = 6, .out_ch = 10,
                                   .stride = 1 + (i % 2)},
                         {1, 6, d, h, w}});
        // mobilenet v2, t = 1 and t = 6, with and without residual
        cases.push_back({BlockSpec{.family = BlockFamily::kMobileNetV2, .in_ch = 8, .out_ch = 8,
                                   .stride = 1, .expansion = 6},
                         {1, 8, d, h, w}});
        cases.push_back({BlockSpec{.family = BlockFamily::kMobileNetV2, .in_ch = 8, .out_ch = 6,
                                   .stride = 1 + (i % 2), .expansion = i % 2 == 0 ? 1 : 6},
                         {1, 8, d, h, w}});
        // shufflenet v1, stride 1 and 2
        cases.push_back({BlockSpec{.family = BlockFamily::kShuffleNetV1, .in_ch = 12, .out_ch = 12,
                                   .stride = 1, .groups = 3},
                         {1, 12, d, h, w}});
        cases.push_back({BlockSpec{.family = BlockFamily::kShuffleNetV1, .in_ch = 6, .out_ch = 18,
                                   .stride = 2, .groups = 3,
                                   .grouped_first_pointwise = i % 2 == 0},
                         {1, 6, d, h, w}});
        // shufflenet v2, stride 1 and 2
        cases.push_back({BlockSpec{.family = BlockFamily::kShuffleNetV2, .in_ch = 8, .out_ch = 8,
                                   .stride = 1},
                         {1, 8, d, h, w}});
        cases.push_back({BlockSpec{.family = BlockFamily::kShuffleNetV2, .in_ch = 6, .out_ch = 12,
                                   .stride = 2},
                         {1, 6, d, h, w}});
        return cases;
    };

    const int rounds = std::max(1, opts.cases / 9);
    for (int i = 0; i < rounds; ++i) {
        for (const Case& c : make_cases(i)) {
            ModelGraph g = make_block_graph(c.spec, c.in);
            g = init_weights(std::move(g), opts.seed + static_cast<uint64_t>(i));
            const Tensor5 x = rand_tensor(rng, c.in);

            Tensor5 want;
            switch (c.spec.family) {
                case BlockFamily::kFire: want = compose_fire(g, c.spec, x); break;
                case BlockFamily::kMobileNetV1: want = compose_mobilenet_v1(g, c.spec, x); break;
                case BlockFamily::kMobileNetV2: want = compose_mobilenet_v2(g, c.spec, x); break;
                case BlockFamily::kShuffleNetV1: want = compose_shufflenet_v1(g, c.spec, x); break;
                case BlockFamily::kShuffleNetV2: want = compose_shufflenet_v2(g, c.spec, x); break;
            }
            for (Backend b : backends) {
                const Tensor5 got = forward(g, x, {.backend = b, .threads = opts.threads});
                chk.tensors(std::string(block_family_name(c.spec.family)) + " s" +
                                std::to_string(c.spec.stride) + "[" + backend_name(b) + "] round " +
                                std::to_string(i),
                            got, want);
            }
        }
    }
}

} // namespace

VerifyResult run_verify(const VerifyOptions& opts) {
    VerifyResult result;
    Check chk{opts, result};
    verify_conv(opts, chk);
    verify_pool(opts, chk);
    verify_elementwise(opts, chk);
    verify_movement(opts, chk);
    verify_softmax(opts, chk);
    verify_blocks(opts, chk);
    return result;
}

} // namespace e3d
