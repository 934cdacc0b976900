#pragma once

#include <cstdint>
#include <functional>

#include "e3d/bench_stats.hpp"
#include "e3d/graph.hpp"

namespace e3d {

struct BenchOptions {
    int64_t batch = 8;
    int64_t warmup = 3;
    int64_t iters = 10;
    uint64_t input_seed = 0;
};

/// Nanosecond monotonic clock; replaceable for tests.
using ClockFn = std::function<int64_t()>;
ClockFn steady_clock_ns();

/// Runs `warmup` untimed forwards and `iters` timed ones on a fixed
/// synthetic input, then reports clips-per-second statistics. iters must be
/// at least 3 so the spread is meaningful.
BenchStats bench(const ModelGraph& graph, const BenchOptions& opts, const ExecContext& ctx = {},
                 const ClockFn& clock = {});

} // namespace e3d
