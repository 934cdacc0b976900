#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

#include "e3d/ops.hpp"

namespace e3d::detail {

/// Splits [0, count) into contiguous chunks, one per worker. Each index is
/// processed by exactly one worker, so outputs are identical for any thread
/// count as long as the body writes disjoint elements.
template <class Body>
void parallel_for(int64_t count, int threads, const Body& body) {
    if (count <= 0) return;
    int workers = std::max(1, threads);
    workers = static_cast<int>(std::min<int64_t>(workers, count));
    if (workers == 1) {
        body(0, count);
        return;
    }
    const int64_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers - 1));
    for (int t = 1; t < workers; ++t) {
        int64_t lo = t * chunk;
        int64_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    body(0, std::min(count, chunk));
    for (auto& th : pool) th.join();
}

struct ConvDims {
    int64_t n, in_c, in_d, in_h, in_w;
    int64_t out_c, out_d, out_h, out_w;
    int64_t kd, kh, kw, sd, sh, sw, pd, ph, pw;
    int64_t icg, ocg; // channels per group, in/out
};

inline ConvDims conv_dims(const Shape5& in, const ConvSpec& s) {
    ConvDims d{};
    d.n = in.n; d.in_c = in.c; d.in_d = in.d; d.in_h = in.h; d.in_w = in.w;
    d.kd = s.kernel[0]; d.kh = s.kernel[1]; d.kw = s.kernel[2];
    d.sd = s.stride[0]; d.sh = s.stride[1]; d.sw = s.stride[2];
    d.pd = s.padding[0]; d.ph = s.padding[1]; d.pw = s.padding[2];
    d.out_c = s.out_ch;
    d.out_d = out_extent(in.d, d.kd, d.sd, d.pd);
    d.out_h = out_extent(in.h, d.kh, d.sh, d.ph);
    d.out_w = out_extent(in.w, d.kw, d.sw, d.pw);
    d.icg = s.in_ch / s.groups;
    d.ocg = s.out_ch / s.groups;
    return d;
}

/// Range of output positions along one axis for which input index
/// o*stride + k - pad stays inside [0, in_extent).
inline void valid_out_range(int64_t k, int64_t pad, int64_t stride, int64_t in_extent,
                            int64_t out_extent_v, int64_t& lo, int64_t& hi) {
    lo = 0;
    if (k < pad) {
        lo = (pad - k + stride - 1) / stride;
    }
    int64_t last_in = in_extent - 1 - k + pad;
    hi = last_in < 0 ? 0 : std::min(out_extent_v, last_in / stride + 1);
    lo = std::min(lo, hi);
}

} // namespace e3d::detail
