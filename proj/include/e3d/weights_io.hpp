#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "e3d/graph.hpp"

namespace e3d {

/// One entry of an E3DW container: a named rank-1..8 float tensor.
struct NamedTensor {
    std::string name;
    std::vector<uint32_t> dims;
    std::vector<float> data;
};

// E3DW container format, all fields little-endian:
//   magic "E3DW" | u32 version=1 | u32 tensor_count
//   per tensor: u16 name_len | name bytes | u8 rank | rank*u32 dims | f32 data
std::vector<uint8_t> e3dw_encode(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> e3dw_decode(const std::vector<uint8_t>& bytes);

void e3dw_write_file(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> e3dw_read_file(const std::string& path);

/// Flattens a graph's weights (conv/linear weights+biases, batchnorm
/// gamma/beta/mean/var) into named tensors; node order, stable names.
std::vector<NamedTensor> collect_weights(const ModelGraph& graph);

/// Writes collect_weights() to an E3DW file.
void save_weights(const ModelGraph& graph, const std::string& path);

/// Loads weights into a freshly built graph; every tensor must match an
/// existing parameter by name and shape, and none may be missing.
void load_weights(ModelGraph& graph, const std::string& path);

/// Single-tensor E3DW convenience for clip files.
void save_tensor(const Tensor5& t, const std::string& name, const std::string& path);
Tensor5 load_tensor(const std::string& path, const Shape5& expect);

} // namespace e3d
