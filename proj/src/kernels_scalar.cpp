// Portable optimized kernels. Row-oriented loops with hoisted pointers and
// precomputed valid ranges; the per-element reduction order matches the
// reference kernels (group channels, then kd, kh, kw), so results stay
// deterministic for any thread count.

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernels_common.hpp"
#include "kernels_impl.hpp"

namespace e3d::scalar {

namespace {

// Pointwise 1x1x1 convolution: per (n, oc) output row, accumulate
// weight-scaled input rows channel by channel.
Tensor5 conv_pointwise(const Tensor5& input, const Tensor5& weights,
                       const std::vector<float>& bias, const ConvSpec& spec, int threads) {
    const Shape5 in = input.shape();
    const int64_t spatial = in.d * in.h * in.w;
    const int64_t icg = spec.in_ch / spec.groups;
    const int64_t ocg = spec.out_ch / spec.groups;
    Tensor5 out({in.n, spec.out_ch, in.d, in.h, in.w});
    const float* x = input.data();
    const float* w = weights.data();
    float* y = out.data();

    detail::parallel_for(in.n * spec.out_ch, threads, [&](int64_t lo, int64_t hi) {
        for (int64_t row = lo; row < hi; ++row) {
            const int64_t n = row / spec.out_ch;
            const int64_t oc = row % spec.out_ch;
            const int64_t g = oc / ocg;
            float* dst = y + row * spatial;
            const float init = bias.empty() ? 0.0f : bias[static_cast<size_t>(oc)];
            std::fill(dst, dst + spatial, init);
            const float* wrow = w + oc * icg;
            for (int64_t icl = 0; icl < icg; ++icl) {
                const float wv = wrow[icl];
                const float* src = x + (n * in.c + g * icg + icl) * spatial;
                for (int64_t s = 0; s < spatial; ++s) dst[s] += wv * src[s];
            }
        }
    });
    return out;
}

// Direct convolution for arbitrary kernel/stride/padding/groups (covers the
// depthwise case with icg == 1). Accumulates into the output row for each
// (channel, tap) pair over its valid output range.
Tensor5 conv_direct(const Tensor5& input, const Tensor5& weights,
                    const std::vector<float>& bias, const ConvSpec& spec, int threads) {
    const auto dd = detail::conv_dims(input.shape(), spec);
    Tensor5 out({dd.n, dd.out_c, dd.out_d, dd.out_h, dd.out_w});
    const float* x = input.data();
    const float* w = weights.data();
    float* y = out.data();
    const int64_t in_plane = dd.in_h * dd.in_w;
    const int64_t in_ch_sz = dd.in_d * in_plane;
    const int64_t out_row_sz = dd.out_w;
    const int64_t k_sz = dd.kd * dd.kh * dd.kw;

    // Valid output-x range per kw tap.
    std::vector<int64_t> wlo(static_cast<size_t>(dd.kw)), whi(static_cast<size_t>(dd.kw));
    for (int64_t kw = 0; kw < dd.kw; ++kw) {
        detail::valid_out_range(kw, dd.pw, dd.sw, dd.in_w, dd.out_w, wlo[static_cast<size_t>(kw)],
                                whi[static_cast<size_t>(kw)]);
    }

    detail::parallel_for(dd.n * dd.out_c * dd.out_d, threads, [&](int64_t lo, int64_t hi) {
        for (int64_t unit = lo; unit < hi; ++unit) {
            const int64_t od = unit % dd.out_d;
            const int64_t noc = unit / dd.out_d;
            const int64_t n = noc / dd.out_c;
            const int64_t oc = noc % dd.out_c;
            const int64_t g = oc / dd.ocg;
            const float* wch = w + oc * dd.icg * k_sz;
            for (int64_t oh = 0; oh < dd.out_h; ++oh) {
                float* dst = y + ((noc * dd.out_d + od) * dd.out_h + oh) * out_row_sz;
                const float init = bias.empty() ? 0.0f : bias[static_cast<size_t>(oc)];
                std::fill(dst, dst + out_row_sz, init);
                for (int64_t icl = 0; icl < dd.icg; ++icl) {
                    const float* xch = x + (n * dd.in_c + g * dd.icg + icl) * in_ch_sz;
                    const float* wk = wch + icl * k_sz;
                    for (int64_t kd = 0; kd < dd.kd; ++kd) {
                        const int64_t id = od * dd.sd + kd - dd.pd;
                        if (id < 0 || id >= dd.in_d) continue;
                        for (int64_t kh = 0; kh < dd.kh; ++kh) {
                            const int64_t ih = oh * dd.sh + kh - dd.ph;
                            if (ih < 0 || ih >= dd.in_h) continue;
                            const float* xrow = xch + id * in_plane + ih * dd.in_w;
                            const float* wrow = wk + (kd * dd.kh + kh) * dd.kw;
                            for (int64_t kw = 0; kw < dd.kw; ++kw) {
                                const float wv = wrow[kw];
                                const int64_t o0 = wlo[static_cast<size_t>(kw)];
                                const int64_t o1 = whi[static_cast<size_t>(kw)];
                                const float* src = xrow + o0 * dd.sw + kw - dd.pw;
                                if (dd.sw == 1) {
                                    for (int64_t o = o0; o < o1; ++o) dst[o] += wv * src[o - o0];
                                } else {
                                    for (int64_t o = o0; o < o1; ++o)
                                        dst[o] += wv * src[(o - o0) * dd.sw];
                                }
                            }
                        }
                    }
                }
            }
        }
    });
    return out;
}

} // namespace

Tensor5 conv3d(const Tensor5& input, const Tensor5& weights, const std::vector<float>& bias,
               const ConvSpec& spec, int threads) {
    if (spec.pointwise()) return conv_pointwise(input, weights, bias, spec, threads);
    return conv_direct(input, weights, bias, spec, threads);
}

Tensor5 pool3d(const Tensor5& input, const PoolSpec& spec, int threads) {
    const Shape5 in = input.shape();
    const Shape5 os = pool_output_shape(in, spec);
    Tensor5 out(os);
    const float* x = input.data();
    float* y = out.data();
    const auto [kd, kh, kw] = spec.kernel;
    const auto [sd, sh, sw] = spec.stride;
    const auto [pd, ph, pw] = spec.padding;
    const int64_t in_plane = in.h * in.w;
    const int64_t in_ch_sz = in.d * in_plane;
    const bool is_max = spec.kind == PoolKind::kMax;

    detail::parallel_for(os.n * os.c, threads, [&](int64_t lo, int64_t hi) {
        for (int64_t ch = lo; ch < hi; ++ch) {
            const float* src = x + ch * in_ch_sz;
            float* dst = y + ch * os.d * os.h * os.w;
            for (int64_t od = 0; od < os.d; ++od) {
                const int64_t d0 = std::max<int64_t>(0, od * sd - pd);
                const int64_t d1 = std::min(in.d, od * sd - pd + kd);
                for (int64_t oh = 0; oh < os.h; ++oh) {
                    const int64_t h0 = std::max<int64_t>(0, oh * sh - ph);
                    const int64_t h1 = std::min(in.h, oh * sh - ph + kh);
                    for (int64_t ow = 0; ow < os.w; ++ow) {
                        const int64_t w0 = std::max<int64_t>(0, ow * sw - pw);
                        const int64_t w1 = std::min(in.w, ow * sw - pw + kw);
                        float best = -std::numeric_limits<float>::infinity();
                        float sum = 0.0f;
                        for (int64_t id = d0; id < d1; ++id) {
                            for (int64_t ih = h0; ih < h1; ++ih) {
                                const float* row = src + id * in_plane + ih * in.w;
                                for (int64_t iw = w0; iw < w1; ++iw) {
                                    best = std::max(best, row[iw]);
                                    sum += row[iw];
                                }
                            }
                        }
                        const int64_t count = (d1 - d0) * (h1 - h0) * (w1 - w0);
                        dst[(od * os.h + oh) * os.w + ow] =
                            is_max ? best : sum / static_cast<float>(count);
                    }
                }
            }
        }
    });
    return out;
}

Tensor5 batchnorm_infer(const Tensor5& input, const BatchNormParams& p, int threads) {
    const Shape5 in = input.shape();
    Tensor5 out(in);
    const int64_t spatial = in.d * in.h * in.w;
    const float* x = input.data();
    float* y = out.data();
    // Fold the normalization into one scale/shift per channel.
    std::vector<float> scale(static_cast<size_t>(in.c)), shift(static_cast<size_t>(in.c));
    for (int64_t c = 0; c < in.c; ++c) {
        const auto ci = static_cast<size_t>(c);
        scale[ci] = p.gamma[ci] / std::sqrt(p.var[ci] + p.eps);
        shift[ci] = p.beta[ci] - p.mean[ci] * scale[ci];
    }
    detail::parallel_for(in.n * in.c, threads, [&](int64_t lo, int64_t hi) {
        for (int64_t ch = lo; ch < hi; ++ch) {
            const float a = scale[static_cast<size_t>(ch % in.c)];
            const float b = shift[static_cast<size_t>(ch % in.c)];
            const float* src = x + ch * spatial;
            float* dst = y + ch * spatial;
            for (int64_t s = 0; s < spatial; ++s) dst[s] = a * src[s] + b;
        }
    });
    return out;
}

Tensor5 relu(const Tensor5& input, int threads) {
    Tensor5 out(input.shape());
    const float* x = input.data();
    float* y = out.data();
    detail::parallel_for(input.size(), threads, [&](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) y[i] = std::max(x[i], 0.0f);
    });
    return out;
}

Tensor5 relu6(const Tensor5& input, int threads) {
    Tensor5 out(input.shape());
    const float* x = input.data();
    float* y = out.data();
    detail::parallel_for(input.size(), threads, [&](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) y[i] = std::min(std::max(x[i], 0.0f), 6.0f);
    });
    return out;
}

Tensor5 add_elementwise(const Tensor5& a, const Tensor5& b, int threads) {
    Tensor5 out(a.shape());
    const float* pa = a.data();
    const float* pb = b.data();
    float* y = out.data();
    detail::parallel_for(a.size(), threads, [&](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) y[i] = pa[i] + pb[i];
    });
    return out;
}

} // namespace e3d::scalar
