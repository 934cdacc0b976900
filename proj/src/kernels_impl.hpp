#pragma once

#include <cstdint>
#include <vector>

#include "e3d/ops.hpp"

// Internal entry points for the optimized kernel variants. All take the
// worker count explicitly; dispatch lives in ops.cpp.

namespace e3d::scalar {
Tensor5 conv3d(const Tensor5& input, const Tensor5& weights, const std::vector<float>& bias,
               const ConvSpec& spec, int threads);
Tensor5 pool3d(const Tensor5& input, const PoolSpec& spec, int threads);
Tensor5 batchnorm_infer(const Tensor5& input, const BatchNormParams& p, int threads);
Tensor5 relu(const Tensor5& input, int threads);
Tensor5 relu6(const Tensor5& input, int threads);
Tensor5 add_elementwise(const Tensor5& a, const Tensor5& b, int threads);
} // namespace e3d::scalar

#if defined(EFF3D_HAVE_AVX2_TU)
namespace e3d::avx2 {
Tensor5 conv3d(const Tensor5& input, const Tensor5& weights, const std::vector<float>& bias,
               const ConvSpec& spec, int threads);
Tensor5 batchnorm_infer(const Tensor5& input, const BatchNormParams& p, int threads);
Tensor5 relu(const Tensor5& input, int threads);
Tensor5 relu6(const Tensor5& input, int threads);
Tensor5 add_elementwise(const Tensor5& a, const Tensor5& b, int threads);
} // namespace e3d::avx2
#endif
