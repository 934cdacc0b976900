#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "e3d/backend.hpp"
#include "e3d/ops.hpp"
#include "e3d/tensor.hpp"

namespace e3d {

enum class NodeKind {
    kInput,
    kConv,
    kBatchNorm,
    kRelu,
    kRelu6,
    kMaxPool,
    kAvgPool,
    kShuffle,
    kSlice,
    kConcat,
    kAdd,
    kLinear,
};

const char* node_kind_name(NodeKind k);

/// One layer of a built architecture. Which attribute fields are meaningful
/// depends on `kind`; weights are empty until init_weights or a load fills
/// them.
struct Node {
    int id = -1;
    std::string name;
    NodeKind kind = NodeKind::kInput;
    std::vector<int> inputs;

    ConvSpec conv;            // kConv
    PoolSpec pool;            // kMaxPool / kAvgPool
    BatchNormParams bn;       // kBatchNorm
    int64_t shuffle_groups = 1;  // kShuffle
    int64_t slice_begin = 0;     // kSlice
    int64_t slice_end = 0;       // kSlice
    int64_t linear_in = 0;       // kLinear
    int64_t linear_out = 0;      // kLinear

    Tensor5 weight;              // kConv: (out,in/g,kd,kh,kw); kLinear: (out,in,1,1,1)
    std::vector<float> bias;     // kConv (optional), kLinear

    Shape5 out_shape;            // inferred at build time with batch 1
};

/// Immutable DAG for one architecture: nodes in topological order, node 0 is
/// the input, the last node produces the class scores as (n, classes, 1,1,1).
struct ModelGraph {
    std::string arch;
    double width = 1.0;
    int64_t classes = 0;
    Shape5 input_shape;          // batch dimension fixed at 1
    std::vector<Node> nodes;
    /// Named anchors used to audit the per-stage output sizes.
    std::vector<std::pair<std::string, int>> checkpoints;
    uint64_t init_seed = 0;
    bool initialized = false;

    const Node& node(int id) const { return nodes[static_cast<size_t>(id)]; }
    int sink() const { return static_cast<int>(nodes.size()) - 1; }
};

/// Incrementally appends nodes, inferring the output shape of each so that
/// weight tensors can be sized immediately.
class GraphBuilder {
public:
    explicit GraphBuilder(Shape5 input_shape);

    int input_id() const { return 0; }
    const Shape5& shape_of(int id) const;

    int conv(const std::string& name, int input, ConvSpec spec);
    int batchnorm(const std::string& name, int input);
    int relu(const std::string& name, int input);
    int relu6(const std::string& name, int input);
    int maxpool(const std::string& name, int input, PoolSpec spec);
    int avgpool(const std::string& name, int input, PoolSpec spec);
    int global_avgpool(const std::string& name, int input);
    int shuffle(const std::string& name, int input, int64_t groups);
    int slice(const std::string& name, int input, int64_t begin, int64_t end);
    int concat(const std::string& name, int a, int b);
    int add(const std::string& name, int a, int b);
    int linear(const std::string& name, int input, int64_t out_features);

    void checkpoint(const std::string& label, int id);

    /// Finalizes the node list into a graph (weights still zero).
    ModelGraph finish(std::string arch, double width, int64_t classes) &&;

private:
    int push(Node n, Shape5 out);
    std::vector<Node> nodes_;
    std::vector<Shape5> shapes_;
    std::vector<std::pair<std::string, int>> checkpoints_;
    Shape5 input_shape_;
};

/// Deterministic 64-bit generator used for weight initialization; one value
/// per call, identical on every platform.
struct SplitMix64 {
    uint64_t state = 0;
    explicit SplitMix64(uint64_t seed) : state(seed) {}
    uint64_t next();
    /// Uniform in [-1, 1) built from the top 24 bits.
    float next_unit();
};

/// Fills every conv/linear weight with uniform values scaled by
/// 1/sqrt(fan_in), zeroes biases and resets batchnorm to identity statistics.
/// A single generator stream is consumed in node order, so equal seeds give
/// bitwise-identical graphs.
ModelGraph init_weights(ModelGraph graph, uint64_t seed);

/// Executes the graph in topological order. The batch size of `input` may
/// differ from the canonical input shape; channel/depth/height/width must
/// match. Returns the sink tensor of shape (n, classes, 1, 1, 1).
/// `tap`, when set, observes every node output (used to cross-check static
/// shape inference against runtime shapes).
Tensor5 forward(const ModelGraph& graph, const Tensor5& input, const ExecContext& ctx = {},
                const std::function<void(const Node&, const Tensor5&)>& tap = {});

/// Score matrix view of a forward result: n rows by `classes` columns.
std::vector<std::vector<float>> scores_from_output(const Tensor5& out);

} // namespace e3d
