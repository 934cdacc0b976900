// AVX2/FMA kernel variants. Vectorization is always across output elements
// (8 lanes of the innermost spatial axis); the reduction order per output
// element matches the scalar kernels, so every lane performs the same fixed
// sequence of fused multiply-adds and results are thread-count independent.

#if defined(EFF3D_HAVE_AVX2_TU) && (defined(__x86_64__) || defined(_M_X64))

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "kernels_common.hpp"
#include "kernels_impl.hpp"

namespace e3d::avx2 {

namespace {

// dst[0..len) += a * src[0..len)
inline void axpy_rows(float* dst, const float* src, int64_t len, float a) {
    const __m256 va = _mm256_set1_ps(a);
    int64_t i = 0;
    for (; i + 8 <= len; i += 8) {
        __m256 d = _mm256_loadu_ps(dst + i);
        d = _mm256_fmadd_ps(va, _mm256_loadu_ps(src + i), d);
        _mm256_storeu_ps(dst + i, d);
    }
    for (; i < len; ++i) dst[i] += a * src[i];
}

// dst[0..len) += a * src[0, stride, 2*stride, ...]
inline void axpy_strided(float* dst, const float* src, int64_t len, float a, int64_t stride) {
    const __m256 va = _mm256_set1_ps(a);
    const __m256i idx = _mm256_setr_epi32(0, static_cast<int>(stride), static_cast<int>(2 * stride),
                                          static_cast<int>(3 * stride), static_cast<int>(4 * stride),
                                          static_cast<int>(5 * stride), static_cast<int>(6 * stride),
                                          static_cast<int>(7 * stride));
    int64_t i = 0;
    for (; i + 8 <= len; i += 8) {
        __m256 s = _mm256_i32gather_ps(src + i * stride, idx, 4);
        __m256 d = _mm256_loadu_ps(dst + i);
        d = _mm256_fmadd_ps(va, s, d);
        _mm256_storeu_ps(dst + i, d);
    }
    for (; i < len; ++i) dst[i] += a * src[i * stride];
}

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
            const float* xbase = x + (n * in.c + g * icg) * spatial;
            for (int64_t icl = 0; icl < icg; ++icl) {
                axpy_rows(dst, xbase + icl * spatial, spatial, wrow[icl]);
            }
        }
    });
    return out;
}

Tensor5 conv_direct(const Tensor5& input, const Tensor5& weights,
                    const std::vector<float>& bias, const ConvSpec& spec, int threads) {
    const auto dd = detail::conv_dims(input.shape(), spec);
    Tensor5 out({dd.n, dd.out_c, dd.out_d, dd.out_h, dd.out_w});
    const float* x = input.data();
    const float* w = weights.data();
    float* y = out.data();
    const int64_t in_plane = dd.in_h * dd.in_w;
    const int64_t in_ch_sz = dd.in_d * in_plane;
    const int64_t k_sz = dd.kd * dd.kh * dd.kw;

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
                float* dst = y + ((noc * dd.out_d + od) * dd.out_h + oh) * dd.out_w;
                const float init = bias.empty() ? 0.0f : bias[static_cast<size_t>(oc)];
                std::fill(dst, dst + dd.out_w, init);
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
                                const int64_t o0 = wlo[static_cast<size_t>(kw)];
                                const int64_t o1 = whi[static_cast<size_t>(kw)];
                                if (o0 >= o1) continue;
                                const float* src = xrow + o0 * dd.sw + kw - dd.pw;
                                if (dd.sw == 1) {
                                    axpy_rows(dst + o0, src, o1 - o0, wrow[kw]);
                                } else {
                                    axpy_strided(dst + o0, src, o1 - o0, wrow[kw], dd.sw);
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

Tensor5 batchnorm_infer(const Tensor5& input, const BatchNormParams& p, int threads) {
    const Shape5 in = input.shape();
    Tensor5 out(in);
    const int64_t spatial = in.d * in.h * in.w;
    const float* x = input.data();
    float* y = out.data();
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
            const __m256 va = _mm256_set1_ps(a);
            const __m256 vb = _mm256_set1_ps(b);
            int64_t s = 0;
            for (; s + 8 <= spatial; s += 8) {
                _mm256_storeu_ps(dst + s, _mm256_fmadd_ps(va, _mm256_loadu_ps(src + s), vb));
            }
            for (; s < spatial; ++s) dst[s] = a * src[s] + b;
        }
    });
    return out;
}

Tensor5 relu(const Tensor5& input, int threads) {
    Tensor5 out(input.shape());
    const float* x = input.data();
    float* y = out.data();
    const __m256 zero = _mm256_setzero_ps();
    detail::parallel_for(input.size() / 8, threads, [&](int64_t lo, int64_t hi) {
        for (int64_t v = lo; v < hi; ++v) {
            _mm256_storeu_ps(y + v * 8, _mm256_max_ps(_mm256_loadu_ps(x + v * 8), zero));
        }
    });
    for (int64_t i = (input.size() / 8) * 8; i < input.size(); ++i) y[i] = std::max(x[i], 0.0f);
    return out;
}

Tensor5 relu6(const Tensor5& input, int threads) {
    Tensor5 out(input.shape());
    const float* x = input.data();
    float* y = out.data();
    const __m256 zero = _mm256_setzero_ps();
    const __m256 six = _mm256_set1_ps(6.0f);
    detail::parallel_for(input.size() / 8, threads, [&](int64_t lo, int64_t hi) {
        for (int64_t v = lo; v < hi; ++v) {
            _mm256_storeu_ps(y + v * 8,
                             _mm256_min_ps(_mm256_max_ps(_mm256_loadu_ps(x + v * 8), zero), six));
        }
    });
    for (int64_t i = (input.size() / 8) * 8; i < input.size(); ++i)
        y[i] = std::min(std::max(x[i], 0.0f), 6.0f);
    return out;
}

Tensor5 add_elementwise(const Tensor5& a, const Tensor5& b, int threads) {
    Tensor5 out(a.shape());
    const float* pa = a.data();
    const float* pb = b.data();
    float* y = out.data();
    detail::parallel_for(a.size() / 8, threads, [&](int64_t lo, int64_t hi) {
        for (int64_t v = lo; v < hi; ++v) {
            _mm256_storeu_ps(y + v * 8, _mm256_add_ps(_mm256_loadu_ps(pa + v * 8),
                                                      _mm256_loadu_ps(pb + v * 8)));
        }
    });
    for (int64_t i = (a.size() / 8) * 8; i < a.size(); ++i) y[i] = pa[i] + pb[i];
    return out;
}

} // namespace e3d::avx2

#endif // EFF3D_HAVE_AVX2_TU && x86_64
