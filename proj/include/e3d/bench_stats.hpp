#pragma once

#include <cstdint>
#include <vector>

namespace e3d {

/// Throughput measurement for one model: clips per second over a fixed
/// number of timed iterations, after untimed warmup runs.
struct BenchStats {
    int64_t batch = 0;
    int64_t warmup = 0;
    int64_t iters = 0;
    int threads = 0;
    std::vector<double> iter_seconds;
    double cps_mean = 0;
    double cps_median = 0;
    double cps_std = 0;

    /// Noise ratio std/mean; what the stability gate inspects.
    double stability() const { return cps_mean > 0 ? cps_std / cps_mean : 0.0; }
};

} // namespace e3d
