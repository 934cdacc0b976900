#include "e3d/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "kernels_common.hpp"
#include "kernels_impl.hpp"

namespace e3d {

void ConvSpec::validate() const {
    if (in_ch < 1 || out_ch < 1) throw std::invalid_argument("conv: channel counts must be >= 1");
    if (groups < 1) throw std::invalid_argument("conv: groups must be >= 1");
    if (in_ch % groups != 0 || out_ch % groups != 0) {
        throw std::invalid_argument("conv: in_ch and out_ch must be divisible by groups (in=" +
                                    std::to_string(in_ch) + " out=" + std::to_string(out_ch) +
                                    " g=" + std::to_string(groups) + ")");
    }
    for (int a = 0; a < 3; ++a) {
        if (kernel[a] < 1) throw std::invalid_argument("conv: kernel extents must be >= 1");
        if (stride[a] < 1) throw std::invalid_argument("conv: strides must be >= 1");
        if (padding[a] < 0) throw std::invalid_argument("conv: padding must be >= 0");
    }
}

BatchNormParams BatchNormParams::identity(int64_t channels) {
    BatchNormParams p;
    const auto c = static_cast<size_t>(channels);
    p.gamma.assign(c, 1.0f);
    p.beta.assign(c, 0.0f);
    p.mean.assign(c, 0.0f);
    p.var.assign(c, 1.0f);
    return p;
}

void BatchNormParams::validate(int64_t channels) const {
    const auto c = static_cast<size_t>(channels);
    if (gamma.size() != c || beta.size() != c || mean.size() != c || var.size() != c) {
        throw std::invalid_argument("batchnorm: parameter vectors must have length " +
                                    std::to_string(channels));
    }
    if (eps < 0.0f) throw std::invalid_argument("batchnorm: eps must be >= 0");
    for (float v : var) {
        if (v < 0.0f) throw std::invalid_argument("batchnorm: running variance must be >= 0");
        if (v + eps <= 0.0f) throw std::invalid_argument("batchnorm: var + eps must be > 0");
    }
}

int64_t out_extent(int64_t in, int64_t k, int64_t s, int64_t p) {
    if (s < 1) throw std::invalid_argument("out_extent: stride must be >= 1");
    if (in + 2 * p < k) {
        throw std::invalid_argument("out_extent: window " + std::to_string(k) +
                                    " does not fit input " + std::to_string(in) + " with padding " +
                                    std::to_string(p));
    }
    const int64_t out = (in + 2 * p - k) / s + 1;
    if (out < 1) throw std::invalid_argument("out_extent: empty output extent");
    return out;
}

Shape5 conv_output_shape(const Shape5& in, const ConvSpec& spec) {
    return {in.n, spec.out_ch, out_extent(in.d, spec.kernel[0], spec.stride[0], spec.padding[0]),
            out_extent(in.h, spec.kernel[1], spec.stride[1], spec.padding[1]),
            out_extent(in.w, spec.kernel[2], spec.stride[2], spec.padding[2])};
}

Shape5 pool_output_shape(const Shape5& in, const PoolSpec& spec) {
    for (int a = 0; a < 3; ++a) {
        if (spec.kernel[a] < 1 || spec.stride[a] < 1 || spec.padding[a] < 0) {
            throw std::invalid_argument("pool: invalid window");
        }
        // A window made purely of padding would have an empty mean.
        if (spec.padding[a] >= spec.kernel[a]) {
            throw std::invalid_argument("pool: padding must be smaller than the window");
        }
    }
    return {in.n, in.c, out_extent(in.d, spec.kernel[0], spec.stride[0], spec.padding[0]),
            out_extent(in.h, spec.kernel[1], spec.stride[1], spec.padding[1]),
            out_extent(in.w, spec.kernel[2], spec.stride[2], spec.padding[2])};
}

namespace {

void check_conv_args(const Tensor5& input, const Tensor5& weights, const std::vector<float>& bias,
                     const ConvSpec& spec) {
    spec.validate();
    if (input.shape().c != spec.in_ch) {
        throw std::invalid_argument("conv: input has " + std::to_string(input.shape().c) +
                                    " channels, spec expects " + std::to_string(spec.in_ch));
    }
    if (!(weights.shape() == spec.weight_shape())) {
        throw std::invalid_argument("conv: weight shape " + weights.shape().str() +
                                    " does not match spec " + spec.weight_shape().str());
    }
    if (spec.has_bias) {
        if (static_cast<int64_t>(bias.size()) != spec.out_ch) {
            throw std::invalid_argument("conv: bias length must equal out_ch");
        }
    } else if (!bias.empty()) {
        throw std::invalid_argument("conv: bias given but spec.has_bias is false");
    }
}

} // namespace

Tensor5 conv3d(const Tensor5& input, const Tensor5& weights, const std::vector<float>& bias,
               const ConvSpec& spec, const ExecContext& ctx) {
    check_conv_args(input, weights, bias, spec);
    const int threads = ctx.effective_threads();
    switch (resolve_backend(ctx.backend)) {
        case Backend::kReference: return ref::conv3d(input, weights, bias, spec);
#if defined(EFF3D_HAVE_AVX2_TU)
        case Backend::kAvx2: return avx2::conv3d(input, weights, bias, spec, threads);
#endif
        default: return scalar::conv3d(input, weights, bias, spec, threads);
    }
}

Tensor5 pool3d(const Tensor5& input, const PoolSpec& spec, const ExecContext& ctx) {
    switch (resolve_backend(ctx.backend)) {
        case Backend::kReference: return ref::pool3d(input, spec);
        default: return scalar::pool3d(input, spec, ctx.effective_threads());
    }
}

Tensor5 batchnorm_infer(const Tensor5& input, const BatchNormParams& p, const ExecContext& ctx) {
    p.validate(input.shape().c);
    const int threads = ctx.effective_threads();
    switch (resolve_backend(ctx.backend)) {
        case Backend::kReference: return ref::batchnorm_infer(input, p);
#if defined(EFF3D_HAVE_AVX2_TU)
        case Backend::kAvx2: return avx2::batchnorm_infer(input, p, threads);
#endif
        default: return scalar::batchnorm_infer(input, p, threads);
    }
}

Tensor5 relu(const Tensor5& input, const ExecContext& ctx) {
    switch (resolve_backend(ctx.backend)) {
        case Backend::kReference: return ref::relu(input);
#if defined(EFF3D_HAVE_AVX2_TU)
        case Backend::kAvx2: return avx2::relu(input, ctx.effective_threads());
#endif
        default: return scalar::relu(input, ctx.effective_threads());
    }
}

Tensor5 relu6(const Tensor5& input, const ExecContext& ctx) {
    switch (resolve_backend(ctx.backend)) {
        case Backend::kReference: return ref::relu6(input);
#if defined(EFF3D_HAVE_AVX2_TU)
        case Backend::kAvx2: return avx2::relu6(input, ctx.effective_threads());
#endif
        default: return scalar::relu6(input, ctx.effective_threads());
    }
}

Tensor5 add_elementwise(const Tensor5& a, const Tensor5& b, const ExecContext& ctx) {
    if (!(a.shape() == b.shape())) {
        throw std::invalid_argument("add: shapes differ (" + a.shape().str() + " vs " +
                                    b.shape().str() + ")");
    }
    switch (resolve_backend(ctx.backend)) {
        case Backend::kReference: return ref::add_elementwise(a, b);
#if defined(EFF3D_HAVE_AVX2_TU)
        case Backend::kAvx2: return avx2::add_elementwise(a, b, ctx.effective_threads());
#endif
        default: return scalar::add_elementwise(a, b, ctx.effective_threads());
    }
}

Tensor5 channel_shuffle(const Tensor5& input, int64_t groups) {
    const Shape5 s = input.shape();
    if (groups < 1 || s.c % groups != 0) {
        throw std::invalid_argument("channel_shuffle: channels " + std::to_string(s.c) +
                                    " not divisible by groups " + std::to_string(groups));
    }
    Tensor5 out(s);
    const int64_t per = s.c / groups;
    const int64_t spatial = s.d * s.h * s.w;
    const float* x = input.data();
    float* y = out.data();
    for (int64_t n = 0; n < s.n; ++n) {
        for (int64_t c = 0; c < s.c; ++c) {
            // View channels as (groups, per), transpose, flatten.
            const int64_t dst_c = (c % per) * groups + c / per;
            std::memcpy(y + (n * s.c + dst_c) * spatial, x + (n * s.c + c) * spatial,
                        static_cast<size_t>(spatial) * sizeof(float));
        }
    }
    return out;
}

std::pair<Tensor5, Tensor5> channel_split(const Tensor5& input, int64_t c_first) {
    const Shape5 s = input.shape();
    if (c_first < 1 || c_first >= s.c) {
        throw std::invalid_argument("channel_split: split point " + std::to_string(c_first) +
                                    " out of range for " + std::to_string(s.c) + " channels");
    }
    Tensor5 a({s.n, c_first, s.d, s.h, s.w});
    Tensor5 b({s.n, s.c - c_first, s.d, s.h, s.w});
    const int64_t spatial = s.d * s.h * s.w;
    const float* x = input.data();
    for (int64_t n = 0; n < s.n; ++n) {
        std::memcpy(a.data() + n * c_first * spatial, x + n * s.c * spatial,
                    static_cast<size_t>(c_first * spatial) * sizeof(float));
        std::memcpy(b.data() + n * (s.c - c_first) * spatial,
                    x + (n * s.c + c_first) * spatial,
                    static_cast<size_t>((s.c - c_first) * spatial) * sizeof(float));
    }
    return {std::move(a), std::move(b)};
}

Tensor5 concat_channels(const Tensor5& a, const Tensor5& b) {
    const Shape5 sa = a.shape();
    const Shape5 sb = b.shape();
    if (sa.n != sb.n || sa.d != sb.d || sa.h != sb.h || sa.w != sb.w) {
        throw std::invalid_argument("concat: non-channel dimensions differ (" + sa.str() + " vs " +
                                    sb.str() + ")");
    }
    Tensor5 out({sa.n, sa.c + sb.c, sa.d, sa.h, sa.w});
    const int64_t spatial = sa.d * sa.h * sa.w;
    for (int64_t n = 0; n < sa.n; ++n) {
        std::memcpy(out.data() + n * (sa.c + sb.c) * spatial, a.data() + n * sa.c * spatial,
                    static_cast<size_t>(sa.c * spatial) * sizeof(float));
        std::memcpy(out.data() + (n * (sa.c + sb.c) + sa.c) * spatial,
                    b.data() + n * sb.c * spatial,
                    static_cast<size_t>(sb.c * spatial) * sizeof(float));
    }
    return out;
}

std::vector<float> softmax(const std::vector<float>& scores) {
    if (scores.empty()) throw std::invalid_argument("softmax: empty input");
    for (float v : scores) {
        if (!std::isfinite(v)) throw std::invalid_argument("softmax: non-finite input");
    }
    const float m = *std::max_element(scores.begin(), scores.end());
    std::vector<float> out(scores.size());
    double sum = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - m);
        sum += out[i];
    }
    const float inv = static_cast<float>(1.0 / sum);
    for (float& v : out) v *= inv;
    return out;
}

} // namespace e3d
