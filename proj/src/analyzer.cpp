#include "e3d/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace e3d {

const char* kMacConvention =
    "macs: conv3d and linear multiplies only, per clip (batch 1); padded tap positions "
    "included; bias, batchnorm, pooling, activations, shuffle/split/concat/add count zero";

std::optional<PublishedRow> published_row(const std::string& arch, double width) {
    for (const PublishedRow& r : published_rows()) {
        if (arch == r.arch && std::fabs(width - r.width) < 1e-9) return r;
    }
    return std::nullopt;
}

const std::vector<PublishedRow>& published_rows() {
    static const std::vector<PublishedRow> rows = {
        {"shufflenet_v1", 0.5, 42, 0.55},   {"shufflenet_v2", 0.25, 42, 0.83},
        {"mobilenet_v1", 0.5, 46, 1.17},    {"mobilenet_v2", 0.2, 42, 0.96},
        {"shufflenet_v1", 1.0, 125, 1.52},  {"shufflenet_v2", 1.0, 119, 1.91},
        {"mobilenet_v1", 1.0, 137, 3.91},   {"mobilenet_v2", 0.45, 126, 1.40},
        {"shufflenet_v1", 1.5, 235, 2.92},  {"shufflenet_v2", 1.5, 215, 3.16},
        {"mobilenet_v1", 1.5, 273, 8.22},   {"mobilenet_v2", 0.7, 245, 2.05},
        {"shufflenet_v1", 2.0, 393, 4.78},  {"shufflenet_v2", 2.0, 360, 6.64},
        {"mobilenet_v1", 2.0, 454, 14.10},  {"mobilenet_v2", 1.0, 446, 3.12},
        {"squeezenet", 1.0, 728, 2.15},
    };
    return rows;
}

std::vector<Shape5> infer_shapes(const ModelGraph& graph) {
    std::vector<Shape5> shapes(graph.nodes.size());
    for (const Node& n : graph.nodes) {
        const auto id = static_cast<size_t>(n.id);
        auto in = [&](int i) -> const Shape5& { return shapes[static_cast<size_t>(n.inputs[static_cast<size_t>(i)])]; };
        switch (n.kind) {
            case NodeKind::kInput: shapes[id] = graph.input_shape; break;
            case NodeKind::kConv: shapes[id] = conv_output_shape(in(0), n.conv); break;
            case NodeKind::kBatchNorm:
            case NodeKind::kRelu:
            case NodeKind::kRelu6:
            case NodeKind::kShuffle:
            case NodeKind::kAdd: shapes[id] = in(0); break;
            case NodeKind::kMaxPool:
            case NodeKind::kAvgPool: shapes[id] = pool_output_shape(in(0), n.pool); break;
            case NodeKind::kSlice: {
                Shape5 s = in(0);
                s.c = n.slice_end - n.slice_begin;
                shapes[id] = s;
                break;
            }
            case NodeKind::kConcat: {
                Shape5 s = in(0);
                if (in(0).d != in(1).d || in(0).h != in(1).h || in(0).w != in(1).w) {
                    throw std::invalid_argument("infer_shapes: concat inputs disagree at " + n.name);
                }
                s.c = in(0).c + in(1).c;
                shapes[id] = s;
                break;
            }
            case NodeKind::kLinear: {
                Shape5 s = in(0);
                s.c = n.linear_out;
                shapes[id] = s;
                break;
            }
        }
        if (n.kind == NodeKind::kAdd && !(in(0) == in(1))) {
            throw std::invalid_argument("infer_shapes: add inputs disagree at " + n.name);
        }
    }
    return shapes;
}

std::vector<int64_t> count_params(const ModelGraph& graph) {
    std::vector<int64_t> params(graph.nodes.size(), 0);
    for (const Node& n : graph.nodes) {
        int64_t p = 0;
        switch (n.kind) {
            case NodeKind::kConv: {
                const auto& k = n.conv.kernel;
                p = n.conv.out_ch * (n.conv.in_ch / n.conv.groups) * k[0] * k[1] * k[2];
                if (n.conv.has_bias) p += n.conv.out_ch;
                break;
            }
            case NodeKind::kBatchNorm: p = 2 * static_cast<int64_t>(n.bn.gamma.size()); break;
            case NodeKind::kLinear: p = n.linear_out * n.linear_in + n.linear_out; break;
            default: break;
        }
        params[static_cast<size_t>(n.id)] = p;
    }
    return params;
}

int64_t total_params(const ModelGraph& graph) {
    const auto v = count_params(graph);
    int64_t t = 0;
    for (int64_t p : v) t += p;
    return t;
}

int64_t conv_macs(const ConvSpec& spec, const Shape5& out_shape) {
    const auto& k = spec.kernel;
    return out_shape.d * out_shape.h * out_shape.w * spec.out_ch *
           (spec.in_ch / spec.groups) * k[0] * k[1] * k[2];
}

std::vector<int64_t> count_macs(const ModelGraph& graph) {
    const auto shapes = infer_shapes(graph);
    std::vector<int64_t> macs(graph.nodes.size(), 0);
    for (const Node& n : graph.nodes) {
        const auto id = static_cast<size_t>(n.id);
        if (n.kind == NodeKind::kConv) {
            macs[id] = conv_macs(n.conv, shapes[id]);
        } else if (n.kind == NodeKind::kLinear) {
            macs[id] = n.linear_in * n.linear_out;
        }
    }
    return macs;
}

int64_t total_macs(const ModelGraph& graph) {
    const auto v = count_macs(graph);
    int64_t t = 0;
    for (int64_t m : v) t += m;
    return t;
}

StructureCounts count_structure(const ModelGraph& graph) {
    struct Depth {
        int64_t convs = 0;
        int64_t relus = 0;
        bool operator<(const Depth& o) const {
            return convs != o.convs ? convs < o.convs : relus < o.relus;
        }
    };
    std::vector<Depth> depth(graph.nodes.size());
    int64_t skips = 0;
    for (const Node& n : graph.nodes) {
        Depth d{};
        for (int i : n.inputs) d = std::max(d, depth[static_cast<size_t>(i)]);
        switch (n.kind) {
            case NodeKind::kConv:
            case NodeKind::kLinear: d.convs += 1; break;
            case NodeKind::kRelu:
            case NodeKind::kRelu6: d.relus += 1; break;
            case NodeKind::kAdd:
            case NodeKind::kConcat: {
                // A junction is a skip connection when one branch bypasses
                // conv layers the other one runs through.
                const Depth a = depth[static_cast<size_t>(n.inputs[0])];
                const Depth b = depth[static_cast<size_t>(n.inputs[1])];
                if (a.convs != b.convs) ++skips;
                break;
            }
            default: break;
        }
        depth[static_cast<size_t>(n.id)] = d;
    }
    const Depth sink = depth[static_cast<size_t>(graph.sink())];
    return {sink.convs, sink.relus, skips};
}

ProfileReport emit_report(const ModelGraph& graph, const std::optional<BenchStats>& bench) {
    ProfileReport rep;
    rep.model = graph.arch;
    rep.width = graph.width;
    rep.classes = graph.classes;
    rep.convention = kMacConvention;
    rep.structure = count_structure(graph);

    const auto shapes = infer_shapes(graph);
    const auto params = count_params(graph);
    const auto macs = count_macs(graph);
    for (const Node& n : graph.nodes) {
        if (n.kind == NodeKind::kInput) continue;
        const auto id = static_cast<size_t>(n.id);
        LayerRecord r{n.name, node_kind_name(n.kind), shapes[id], params[id], macs[id]};
        rep.total_params += r.params;
        rep.total_macs += r.macs;
        rep.layers.push_back(std::move(r));
    }
    rep.bench = bench;

    if (auto row = published_row(graph.arch, graph.width)) {
        PublishedComparison cmp;
        cmp.params_m = row->params_m;
        cmp.mflops = row->mflops;
        const double got_params_m = static_cast<double>(rep.total_params) / 1e6;
        const double got_mflops = static_cast<double>(rep.total_macs) / 1e6;
        cmp.params_delta_pct = 100.0 * (got_params_m - row->params_m) / row->params_m;
        cmp.macs_delta_pct = 100.0 * (got_mflops - row->mflops) / row->mflops;
        cmp.params_within_5pct = std::fabs(cmp.params_delta_pct) <= 5.0;
        cmp.macs_within_25pct = std::fabs(cmp.macs_delta_pct) <= 25.0;
        if (!cmp.params_within_5pct || !cmp.macs_within_25pct) {
            for (const LayerRecord& r : rep.layers) {
                if (r.params > 0 || r.macs > 0) cmp.discrepancy.push_back(r);
            }
        }
        rep.published = std::move(cmp);
    }
    return rep;
}

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json shape_json(const Shape5& s) {
    return ordered_json::array({s.c, s.d, s.h, s.w});
}

Shape5 shape_from_json(const ordered_json& j) {
    return Shape5{1, j.at(0).get<int64_t>(), j.at(1).get<int64_t>(), j.at(2).get<int64_t>(),
                  j.at(3).get<int64_t>()};
}

ordered_json layer_json(const LayerRecord& r) {
    ordered_json j;
    j["name"] = r.name;
    j["kind"] = r.kind;
    j["shape"] = shape_json(r.shape);
    j["params"] = r.params;
    j["macs"] = r.macs;
    return j;
}

LayerRecord layer_from_json(const ordered_json& j) {
    LayerRecord r;
    r.name = j.at("name").get<std::string>();
    r.kind = j.at("kind").get<std::string>();
    r.shape = shape_from_json(j.at("shape"));
    r.params = j.at("params").get<int64_t>();
    r.macs = j.at("macs").get<int64_t>();
    return r;
}

ordered_json bench_json(const BenchStats& b) {
    ordered_json j;
    j["batch"] = b.batch;
    j["warmup"] = b.warmup;
    j["iters"] = b.iters;
    j["threads"] = b.threads;
    j["iter_seconds"] = b.iter_seconds;
    j["cps_mean"] = b.cps_mean;
    j["cps_median"] = b.cps_median;
    j["cps_std"] = b.cps_std;
    j["stability"] = b.stability();
    return j;
}

BenchStats bench_from_json(const ordered_json& j) {
    BenchStats b;
    b.batch = j.at("batch").get<int64_t>();
    b.warmup = j.at("warmup").get<int64_t>();
    b.iters = j.at("iters").get<int64_t>();
    b.threads = j.at("threads").get<int>();
    b.iter_seconds = j.at("iter_seconds").get<std::vector<double>>();
    b.cps_mean = j.at("cps_mean").get<double>();
    b.cps_median = j.at("cps_median").get<double>();
    b.cps_std = j.at("cps_std").get<double>();
    return b;
}

} // namespace

std::string report_to_json(const ProfileReport& rep, int indent) {
    ordered_json j;
    j["model"] = rep.model;
    j["width"] = rep.width;
    j["classes"] = rep.classes;
    j["convention"] = rep.convention;
    j["totals"] = ordered_json{{"params", rep.total_params}, {"macs", rep.total_macs}};
    j["structure"] = ordered_json{{"layers", rep.structure.layers},
                                  {"nonlin", rep.structure.nonlin},
                                  {"skips", rep.structure.skips}};
    j["layers"] = ordered_json::array();
    for (const LayerRecord& r : rep.layers) j["layers"].push_back(layer_json(r));
    if (rep.bench) j["bench"] = bench_json(*rep.bench);
    if (rep.published) {
        const auto& c = *rep.published;
        ordered_json p;
        p["params_m"] = c.params_m;
        p["mflops"] = c.mflops;
        p["params_delta_pct"] = c.params_delta_pct;
        p["macs_delta_pct"] = c.macs_delta_pct;
        p["params_within_5pct"] = c.params_within_5pct;
        p["macs_within_25pct"] = c.macs_within_25pct;
        p["discrepancy"] = ordered_json::array();
        for (const LayerRecord& r : c.discrepancy) p["discrepancy"].push_back(layer_json(r));
        j["published"] = std::move(p);
    }
    return j.dump(indent) + "\n";
}

ProfileReport report_from_json(const std::string& text) {
    const auto j = ordered_json::parse(text);
    ProfileReport rep;
    rep.model = j.at("model").get<std::string>();
    rep.width = j.at("width").get<double>();
    rep.classes = j.at("classes").get<int64_t>();
    rep.convention = j.at("convention").get<std::string>();
    rep.total_params = j.at("totals").at("params").get<int64_t>();
    rep.total_macs = j.at("totals").at("macs").get<int64_t>();
    rep.structure.layers = j.at("structure").at("layers").get<int64_t>();
    rep.structure.nonlin = j.at("structure").at("nonlin").get<int64_t>();
    rep.structure.skips = j.at("structure").at("skips").get<int64_t>();
    for (const auto& lj : j.at("layers")) rep.layers.push_back(layer_from_json(lj));
    if (j.contains("bench")) rep.bench = bench_from_json(j.at("bench"));
    if (j.contains("published")) {
        const auto& p = j.at("published");
        PublishedComparison c;
        c.params_m = p.at("params_m").get<double>();
        c.mflops = p.at("mflops").get<double>();
        c.params_delta_pct = p.at("params_delta_pct").get<double>();
        c.macs_delta_pct = p.at("macs_delta_pct").get<double>();
        c.params_within_5pct = p.at("params_within_5pct").get<bool>();
        c.macs_within_25pct = p.at("macs_within_25pct").get<bool>();
        for (const auto& lj : p.at("discrepancy")) c.discrepancy.push_back(layer_from_json(lj));
        rep.published = std::move(c);
    }
    return rep;
}

} // namespace e3d
