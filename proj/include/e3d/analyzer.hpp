#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "e3d/bench_stats.hpp"
#include "e3d/graph.hpp"

namespace e3d {

struct LayerRecord {
    std::string name;
    std::string kind;
    Shape5 shape;      // batch-free; n is always 1
    int64_t params = 0;
    int64_t macs = 0;

    bool operator==(const LayerRecord&) const = default;
};

struct StructureCounts {
    int64_t layers = 0;
    int64_t nonlin = 0;
    int64_t skips = 0;

    bool operator==(const StructureCounts&) const = default;
};

/// Reference complexity figures bundled for the stock configurations
/// (parameters in millions, multiply-adds in millions, per clip).
struct PublishedRow {
    const char* arch;
    double width;
    double mflops;
    double params_m;
};
std::optional<PublishedRow> published_row(const std::string& arch, double width);
const std::vector<PublishedRow>& published_rows();

struct PublishedComparison {
    double params_m = 0;
    double mflops = 0;
    double params_delta_pct = 0;
    double macs_delta_pct = 0;
    bool params_within_5pct = false;
    bool macs_within_25pct = false;
    /// Per-layer multiply-add itemization, emitted whenever a total misses
    /// its tolerance band so the gap can be audited layer by layer.
    std::vector<LayerRecord> discrepancy;
};

struct ProfileReport {
    std::string model;
    double width = 1.0;
    int64_t classes = 0;
    std::string convention;
    int64_t total_params = 0;
    int64_t total_macs = 0;
    StructureCounts structure;
    std::vector<LayerRecord> layers;
    std::optional<BenchStats> bench;
    std::optional<PublishedComparison> published;
};

/// Symbolic shape propagation; must agree with the shapes observed during
/// forward() on any conforming input.
std::vector<Shape5> infer_shapes(const ModelGraph& graph);

/// Learnable scalars per node: conv/linear weights and biases plus the
/// batchnorm affine pair; running statistics are excluded.
std::vector<int64_t> count_params(const ModelGraph& graph);
int64_t total_params(const ModelGraph& graph);

/// Multiply-adds per node for a single clip (batch 1). Convolution and
/// linear layers only; padded tap positions count, bias additions do not.
std::vector<int64_t> count_macs(const ModelGraph& graph);
int64_t total_macs(const ModelGraph& graph);

/// The MAC bill of one conv/linear layer in closed form.
int64_t conv_macs(const ConvSpec& spec, const Shape5& out_shape);

/// Structural statistics: conv/linear layers and activations along the
/// longest input-to-scores path (parallel branches counted once), plus
/// add/concat junctions whose incoming branches have different conv depths.
StructureCounts count_structure(const ModelGraph& graph);

extern const char* kMacConvention;

ProfileReport emit_report(const ModelGraph& graph,
                          const std::optional<BenchStats>& bench = std::nullopt);

std::string report_to_json(const ProfileReport& report, int indent = 2);
ProfileReport report_from_json(const std::string& text);

} // namespace e3d
