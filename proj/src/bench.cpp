#include "e3d/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "e3d/scoring.hpp"

namespace e3d {

ClockFn steady_clock_ns() {
    return [] {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(
                   std::chrono::steady_clock::now().time_since_epoch())
            .count();
    };
}

BenchStats bench(const ModelGraph& graph, const BenchOptions& opts, const ExecContext& ctx,
                 const ClockFn& clock) {
    if (opts.batch < 1) throw std::invalid_argument("bench: batch must be >= 1");
    if (opts.iters < 3) throw std::invalid_argument("bench: timed iterations must be >= 3");
    if (opts.warmup < 0) throw std::invalid_argument("bench: warmup must be >= 0");

    const ClockFn now = clock ? clock : steady_clock_ns();
    const Shape5 in = graph.input_shape;
    const Tensor5 input =
        make_clip({opts.batch, in.c, in.d, in.h, in.w}, ClipSource::from_seed(opts.input_seed));

    for (int64_t i = 0; i < opts.warmup; ++i) {
        (void)forward(graph, input, ctx);
    }

    BenchStats stats;
    stats.batch = opts.batch;
    stats.warmup = opts.warmup;
    stats.iters = opts.iters;
    stats.threads = ctx.effective_threads();
    stats.iter_seconds.reserve(static_cast<size_t>(opts.iters));

    std::vector<double> cps;
    cps.reserve(static_cast<size_t>(opts.iters));
    for (int64_t i = 0; i < opts.iters; ++i) {
        const int64_t t0 = now();
        (void)forward(graph, input, ctx);
        const int64_t t1 = now();
        const double sec = static_cast<double>(t1 - t0) * 1e-9;
        if (sec <= 0) throw std::runtime_error("bench: non-positive iteration time");
        stats.iter_seconds.push_back(sec);
        cps.push_back(static_cast<double>(opts.batch) / sec);
    }

    double sum = 0;
    for (double v : cps) sum += v;
    stats.cps_mean = sum / static_cast<double>(cps.size());

    std::vector<double> sorted = cps;
    std::sort(sorted.begin(), sorted.end());
    const size_t mid = sorted.size() / 2;
    stats.cps_median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);

    double var = 0;
    for (double v : cps) var += (v - stats.cps_mean) * (v - stats.cps_mean);
    stats.cps_std = std::sqrt(var / static_cast<double>(cps.size()));
    return stats;
}

} // namespace e3d
