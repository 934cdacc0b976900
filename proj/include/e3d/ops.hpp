#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "e3d/backend.hpp"
#include "e3d/tensor.hpp"

namespace e3d {

/// Full description of one 3-D convolution. Kernel/stride/padding are in
/// (depth, height, width) order. groups == in_ch == out_ch is the depthwise
/// case; kernel (1,1,1) with unit stride and no padding is pointwise.
struct ConvSpec {
    int64_t in_ch = 0;
    int64_t out_ch = 0;
    std::array<int64_t, 3> kernel{1, 1, 1};
    std::array<int64_t, 3> stride{1, 1, 1};
    std::array<int64_t, 3> padding{0, 0, 0};
    int64_t groups = 1;
    bool has_bias = false;

    void validate() const; // throws std::invalid_argument
    bool depthwise() const { return groups > 1 && groups == in_ch && groups == out_ch; }
    bool pointwise() const {
        return kernel == std::array<int64_t, 3>{1, 1, 1} &&
               stride == std::array<int64_t, 3>{1, 1, 1} &&
               padding == std::array<int64_t, 3>{0, 0, 0};
    }
    Shape5 weight_shape() const { return {out_ch, in_ch / groups, kernel[0], kernel[1], kernel[2]}; }
};

/// Inference-mode batch normalization parameters, one entry per channel.
struct BatchNormParams {
    std::vector<float> gamma;
    std::vector<float> beta;
    std::vector<float> mean;
    std::vector<float> var;
    float eps = 1e-5f;

    static BatchNormParams identity(int64_t channels);
    void validate(int64_t channels) const;
};

enum class PoolKind { kMax, kAvg };

struct PoolSpec {
    PoolKind kind = PoolKind::kMax;
    std::array<int64_t, 3> kernel{1, 1, 1};
    std::array<int64_t, 3> stride{1, 1, 1};
    std::array<int64_t, 3> padding{0, 0, 0};
};

/// floor((in + 2p - k)/s) + 1; throws if the window does not fit or the
/// result would be < 1.
int64_t out_extent(int64_t in, int64_t k, int64_t s, int64_t p);

Shape5 conv_output_shape(const Shape5& in, const ConvSpec& spec);
Shape5 pool_output_shape(const Shape5& in, const PoolSpec& spec);

// Dispatched operations. Each validates its inputs, picks the kernel variant
// from ctx and returns a freshly allocated tensor. Every output element is
// produced by exactly one fixed-order reduction, so results are bitwise
// reproducible for a given backend regardless of the thread count.
Tensor5 conv3d(const Tensor5& input, const Tensor5& weights, const std::vector<float>& bias,
               const ConvSpec& spec, const ExecContext& ctx = {});
Tensor5 pool3d(const Tensor5& input, const PoolSpec& spec, const ExecContext& ctx = {});
Tensor5 batchnorm_infer(const Tensor5& input, const BatchNormParams& p, const ExecContext& ctx = {});
Tensor5 relu(const Tensor5& input, const ExecContext& ctx = {});
Tensor5 relu6(const Tensor5& input, const ExecContext& ctx = {});
Tensor5 add_elementwise(const Tensor5& a, const Tensor5& b, const ExecContext& ctx = {});

// Data-movement operations; single implementation, no dispatch.
Tensor5 channel_shuffle(const Tensor5& input, int64_t groups);
std::pair<Tensor5, Tensor5> channel_split(const Tensor5& input, int64_t c_first);
Tensor5 concat_channels(const Tensor5& a, const Tensor5& b);

/// Numerically stabilized softmax over a score vector.
std::vector<float> softmax(const std::vector<float>& scores);

/// Naive reference kernels. Plain nested loops, single threaded; these are
/// the oracle every optimized variant is tested against.
namespace ref {
Tensor5 conv3d(const Tensor5& input, const Tensor5& weights, const std::vector<float>& bias,
               const ConvSpec& spec);
Tensor5 pool3d(const Tensor5& input, const PoolSpec& spec);
Tensor5 batchnorm_infer(const Tensor5& input, const BatchNormParams& p);
Tensor5 relu(const Tensor5& input);
Tensor5 relu6(const Tensor5& input);
Tensor5 add_elementwise(const Tensor5& a, const Tensor5& b);
} // namespace ref

} // namespace e3d
