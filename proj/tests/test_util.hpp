#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "e3d/ops.hpp"
#include "e3d/tensor.hpp"

namespace testutil {

inline e3d::Tensor5 random_tensor(e3d::Shape5 shape, uint64_t seed, float lo = -1.0f,
                                  float hi = 1.0f) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(lo, hi);
    e3d::Tensor5 t(shape);
    for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
    return t;
}

inline std::vector<float> random_vec(size_t n, uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(lo, hi);
    std::vector<float> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

/// |a-b| <= max(abs_floor, rel * max(|a|,|b|))
inline bool close(float a, float b, float rel = 1e-5f, float abs_floor = 1e-6f) {
    const float diff = std::fabs(a - b);
    const float scale = std::max(std::fabs(a), std::fabs(b));
    return diff <= std::max(abs_floor, rel * scale);
}

struct CompareResult {
    bool ok = true;
    int64_t first_bad = -1;
    float a = 0, b = 0;
    std::string describe() const {
        if (ok) return "equal";
        return "first mismatch at flat index " + std::to_string(first_bad) + ": " +
               std::to_string(a) + " vs " + std::to_string(b);
    }
};

inline CompareResult compare(const e3d::Tensor5& x, const e3d::Tensor5& y, float rel = 1e-5f,
                             float abs_floor = 1e-6f) {
    CompareResult r;
    if (!(x.shape() == y.shape())) {
        r.ok = false;
        r.first_bad = -2;
        return r;
    }
    for (int64_t i = 0; i < x.size(); ++i) {
        if (!close(x.data()[i], y.data()[i], rel, abs_floor)) {
            r.ok = false;
            r.first_bad = i;
            r.a = x.data()[i];
            r.b = y.data()[i];
            return r;
        }
    }
    return r;
}

inline bool bitwise_equal(const e3d::Tensor5& x, const e3d::Tensor5& y) {
    if (!(x.shape() == y.shape())) return false;
    for (int64_t i = 0; i < x.size(); ++i) {
        if (x.data()[i] != y.data()[i]) return false;
    }
    return true;
}

} // namespace testutil
