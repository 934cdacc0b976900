#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "e3d/backend.hpp"

namespace e3d {

struct VerifyOptions {
    /// Randomized cases per primitive kernel and per block family.
    int cases = 200;
    uint64_t seed = 1;
    int threads = 0;
    /// Relative tolerance with a small absolute floor.
    float rel_tol = 1e-5f;
    float abs_tol = 1e-6f;
};

struct VerifyResult {
    int64_t checks = 0;
    int64_t failures = 0;
    std::vector<std::string> messages; // one line per failed property

    bool ok() const { return failures == 0; }
};

/// Compares every optimized kernel variant against the naive reference on
/// randomized shapes (conv with groups in {1, 2, c}, strides 1/2, pools,
/// batchnorm, activations, shuffle/split/concat/add, softmax) and every
/// block family against an explicit composition of reference primitives.
VerifyResult run_verify(const VerifyOptions& opts);

} // namespace e3d
