#include "e3d/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace e3d {

std::string Shape5::str() const {
    std::ostringstream os;
    os << n << "x" << c << "x" << d << "x" << h << "x" << w;
    return os.str();
}

static void check_shape(const Shape5& s) {
    if (s.n < 1 || s.c < 1 || s.d < 1 || s.h < 1 || s.w < 1) {
        throw std::invalid_argument("Tensor5: all dimensions must be >= 1, got " + s.str());
    }
}

Tensor5::Tensor5(Shape5 shape, float fill) : shape_(shape) {
    check_shape(shape);
    data_.assign(static_cast<size_t>(shape.numel()), fill);
}

Tensor5 Tensor5::from_data(Shape5 shape, std::vector<float> data) {
    check_shape(shape);
    if (static_cast<int64_t>(data.size()) != shape.numel()) {
        throw std::invalid_argument("Tensor5: data length " + std::to_string(data.size()) +
                                    " does not match shape " + shape.str());
    }
    Tensor5 t;
    t.shape_ = shape;
    t.data_ = std::move(data);
    return t;
}

bool Tensor5::all_finite() const {
    for (float v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

} // namespace e3d
