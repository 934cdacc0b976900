// Naive reference kernels. Deliberately written as plain nested loops over
// logical indices; every optimized variant is tested against these.

#include <algorithm>
#include <cmath>
#include <limits>

#include "e3d/ops.hpp"
#include "kernels_common.hpp"

namespace e3d::ref {

Tensor5 conv3d(const Tensor5& input, const Tensor5& weights, const std::vector<float>& bias,
               const ConvSpec& spec) {
    const auto d = detail::conv_dims(input.shape(), spec);
    Tensor5 out({d.n, d.out_c, d.out_d, d.out_h, d.out_w});
    for (int64_t n = 0; n < d.n; ++n) {
        for (int64_t oc = 0; oc < d.out_c; ++oc) {
            const int64_t g = oc / d.ocg;
            for (int64_t od = 0; od < d.out_d; ++od) {
                for (int64_t oh = 0; oh < d.out_h; ++oh) {
                    for (int64_t ow = 0; ow < d.out_w; ++ow) {
                        float acc = 0.0f;
                        // Fixed reduction order: group channels, then kd, kh, kw.
                        for (int64_t icl = 0; icl < d.icg; ++icl) {
                            const int64_t ic = g * d.icg + icl;
                            for (int64_t kd = 0; kd < d.kd; ++kd) {
                                const int64_t id = od * d.sd + kd - d.pd;
                                if (id < 0 || id >= d.in_d) continue;
                                for (int64_t kh = 0; kh < d.kh; ++kh) {
                                    const int64_t ih = oh * d.sh + kh - d.ph;
                                    if (ih < 0 || ih >= d.in_h) continue;
                                    for (int64_t kw = 0; kw < d.kw; ++kw) {
                                        const int64_t iw = ow * d.sw + kw - d.pw;
                                        if (iw < 0 || iw >= d.in_w) continue;
                                        acc += input.at(n, ic, id, ih, iw) *
                                               weights.at(oc, icl, kd, kh, kw);
                                    }
                                }
                            }
                        }
                        if (!bias.empty()) acc += bias[static_cast<size_t>(oc)];
                        out.at(n, oc, od, oh, ow) = acc;
                    }
                }
            }
        }
    }
    return out;
}

Tensor5 pool3d(const Tensor5& input, const PoolSpec& spec) {
    const Shape5 in = input.shape();
    const Shape5 os = pool_output_shape(in, spec);
    Tensor5 out(os);
    const auto [kd, kh, kw] = spec.kernel;
    const auto [sd, sh, sw] = spec.stride;
    const auto [pd, ph, pw] = spec.padding;
    for (int64_t n = 0; n < os.n; ++n) {
        for (int64_t c = 0; c < os.c; ++c) {
            for (int64_t od = 0; od < os.d; ++od) {
                for (int64_t oh = 0; oh < os.h; ++oh) {
                    for (int64_t ow = 0; ow < os.w; ++ow) {
                        float best = -std::numeric_limits<float>::infinity();
                        float sum = 0.0f;
                        int64_t count = 0;
                        for (int64_t z = 0; z < kd; ++z) {
                            const int64_t id = od * sd + z - pd;
                            if (id < 0 || id >= in.d) continue;
                            for (int64_t y = 0; y < kh; ++y) {
                                const int64_t ih = oh * sh + y - ph;
                                if (ih < 0 || ih >= in.h) continue;
                                for (int64_t x = 0; x < kw; ++x) {
                                    const int64_t iw = ow * sw + x - pw;
                                    if (iw < 0 || iw >= in.w) continue;
                                    const float v = input.at(n, c, id, ih, iw);
                                    best = std::max(best, v);
                                    sum += v;
                                    ++count;
                                }
                            }
                        }
                        // Average divides by the in-bounds count; padding never
                        // contributes to the mean.
                        out.at(n, c, od, oh, ow) =
                            spec.kind == PoolKind::kMax ? best : sum / static_cast<float>(count);
                    }
                }
            }
        }
    }
    return out;
}

Tensor5 batchnorm_infer(const Tensor5& input, const BatchNormParams& p) {
    const Shape5 s = input.shape();
    Tensor5 out(s);
    for (int64_t n = 0; n < s.n; ++n) {
        for (int64_t c = 0; c < s.c; ++c) {
            const float gamma = p.gamma[static_cast<size_t>(c)];
            const float beta = p.beta[static_cast<size_t>(c)];
            const float mean = p.mean[static_cast<size_t>(c)];
            const float var = p.var[static_cast<size_t>(c)];
            for (int64_t d = 0; d < s.d; ++d) {
                for (int64_t h = 0; h < s.h; ++h) {
                    for (int64_t w = 0; w < s.w; ++w) {
                        const float x = input.at(n, c, d, h, w);
                        out.at(n, c, d, h, w) =
                            (x - mean) / std::sqrt(var + p.eps) * gamma + beta;
                    }
                }
            }
        }
    }
    return out;
}

Tensor5 relu(const Tensor5& input) {
    Tensor5 out(input.shape());
    const float* x = input.data();
    float* y = out.data();
    for (int64_t i = 0; i < input.size(); ++i) y[i] = std::max(x[i], 0.0f);
    return out;
}

Tensor5 relu6(const Tensor5& input) {
    Tensor5 out(input.shape());
    const float* x = input.data();
    float* y = out.data();
    for (int64_t i = 0; i < input.size(); ++i) y[i] = std::min(std::max(x[i], 0.0f), 6.0f);
    return out;
}

Tensor5 add_elementwise(const Tensor5& a, const Tensor5& b) {
    Tensor5 out(a.shape());
    const float* pa = a.data();
    const float* pb = b.data();
    float* y = out.data();
    for (int64_t i = 0; i < a.size(); ++i) y[i] = pa[i] + pb[i];
    return out;
}

} // namespace e3d::ref
