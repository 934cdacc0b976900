#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace e3d {

/// Dense rank-5 shape in (batch, channels, depth, height, width) order.
struct Shape5 {
    int64_t n = 1;
    int64_t c = 1;
    int64_t d = 1;
    int64_t h = 1;
    int64_t w = 1;

    int64_t numel() const { return n * c * d * h * w; }
    bool operator==(const Shape5& o) const = default;
    std::string str() const;
};

/// Contiguous float32 tensor in row-major (n, c, d, h, w) layout.
/// Also used for convolution weights as (out_ch, in_ch/groups, kd, kh, kw)
/// and linear weights as (out, in, 1, 1, 1).
class Tensor5 {
public:
    Tensor5() = default;
    explicit Tensor5(Shape5 shape, float fill = 0.0f);
    static Tensor5 from_data(Shape5 shape, std::vector<float> data);

    const Shape5& shape() const { return shape_; }
    int64_t size() const { return static_cast<int64_t>(data_.size()); }
    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& vec() { return data_; }
    const std::vector<float>& vec() const { return data_; }

    int64_t index(int64_t n, int64_t c, int64_t d, int64_t h, int64_t w) const {
        return (((n * shape_.c + c) * shape_.d + d) * shape_.h + h) * shape_.w + w;
    }
    float& at(int64_t n, int64_t c, int64_t d, int64_t h, int64_t w) {
        return data_[index(n, c, d, h, w)];
    }
    float at(int64_t n, int64_t c, int64_t d, int64_t h, int64_t w) const {
        return data_[index(n, c, d, h, w)];
    }

    bool all_finite() const;

private:
    Shape5 shape_{};
    std::vector<float> data_;
};

} // namespace e3d
