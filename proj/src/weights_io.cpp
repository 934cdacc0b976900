#include "e3d/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace e3d {

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xFF));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::vector<uint8_t>& out, float f) {
    put_u32(out, std::bit_cast<uint32_t>(f));
}

struct Reader {
    const std::vector<uint8_t>& bytes;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > bytes.size()) throw std::runtime_error("E3DW: truncated file");
    }
    uint8_t u8() {
        need(1);
        return bytes[pos++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos + static_cast<size_t>(i)]) << (8 * i);
        pos += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
        pos += n;
        return s;
    }
};

} // namespace

std::vector<uint8_t> e3dw_encode(const std::vector<NamedTensor>& tensors) {
    std::vector<uint8_t> out;
    out.push_back('E');
    out.push_back('3');
    out.push_back('D');
    out.push_back('W');
    put_u32(out, 1u);
    put_u32(out, static_cast<uint32_t>(tensors.size()));
    for (const NamedTensor& t : tensors) {
        if (t.name.size() > 0xFFFF) throw std::invalid_argument("E3DW: name too long");
        if (t.dims.empty() || t.dims.size() > 255) {
            throw std::invalid_argument("E3DW: rank must be 1..255");
        }
        uint64_t count = 1;
        for (uint32_t d : t.dims) count *= d;
        if (count != t.data.size()) throw std::invalid_argument("E3DW: dims do not match data");
        put_u16(out, static_cast<uint16_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        out.push_back(static_cast<uint8_t>(t.dims.size()));
        for (uint32_t d : t.dims) put_u32(out, d);
        for (float f : t.data) put_f32(out, f);
    }
    return out;
}

std::vector<NamedTensor> e3dw_decode(const std::vector<uint8_t>& bytes) {
    Reader r{bytes};
    if (r.str(4) != "E3DW") throw std::runtime_error("E3DW: bad magic");
    const uint32_t version = r.u32();
    if (version != 1) throw std::runtime_error("E3DW: unsupported version " + std::to_string(version));
    const uint32_t count = r.u32();
    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        const uint16_t name_len = r.u16();
        t.name = r.str(name_len);
        const uint8_t rank = r.u8();
        if (rank == 0) throw std::runtime_error("E3DW: zero rank");
        uint64_t n = 1;
        for (uint8_t d = 0; d < rank; ++d) {
            t.dims.push_back(r.u32());
            n *= t.dims.back();
        }
        t.data.resize(n);
        for (uint64_t k = 0; k < n; ++k) t.data[k] = r.f32();
        tensors.push_back(std::move(t));
    }
    if (r.pos != bytes.size()) throw std::runtime_error("E3DW: trailing bytes");
    return tensors;
}

void e3dw_write_file(const std::string& path, const std::vector<NamedTensor>& tensors) {
    const auto bytes = e3dw_encode(tensors);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<NamedTensor> e3dw_read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return e3dw_decode(bytes);
}

namespace {

NamedTensor from_vec(std::string name, const std::vector<float>& v) {
    return NamedTensor{std::move(name), {static_cast<uint32_t>(v.size())}, v};
}

} // namespace

std::vector<NamedTensor> collect_weights(const ModelGraph& graph) {
    std::vector<NamedTensor> out;
    for (const Node& n : graph.nodes) {
        if (n.kind == NodeKind::kConv) {
            const Shape5 s = n.weight.shape();
            out.push_back(NamedTensor{n.name + ".weight",
                                      {static_cast<uint32_t>(s.n), static_cast<uint32_t>(s.c),
                                       static_cast<uint32_t>(s.d), static_cast<uint32_t>(s.h),
                                       static_cast<uint32_t>(s.w)},
                                      n.weight.vec()});
            if (!n.bias.empty()) out.push_back(from_vec(n.name + ".bias", n.bias));
        } else if (n.kind == NodeKind::kLinear) {
            out.push_back(NamedTensor{n.name + ".weight",
                                      {static_cast<uint32_t>(n.linear_out),
                                       static_cast<uint32_t>(n.linear_in)},
                                      n.weight.vec()});
            out.push_back(from_vec(n.name + ".bias", n.bias));
        } else if (n.kind == NodeKind::kBatchNorm) {
            out.push_back(from_vec(n.name + ".gamma", n.bn.gamma));
            out.push_back(from_vec(n.name + ".beta", n.bn.beta));
            out.push_back(from_vec(n.name + ".mean", n.bn.mean));
            out.push_back(from_vec(n.name + ".var", n.bn.var));
        }
    }
    return out;
}

void save_weights(const ModelGraph& graph, const std::string& path) {
    if (!graph.initialized) throw std::logic_error("save_weights: graph is not initialized");
    e3dw_write_file(path, collect_weights(graph));
}

void load_weights(ModelGraph& graph, const std::string& path) {
    auto tensors = e3dw_read_file(path);
    std::map<std::string, NamedTensor*> by_name;
    for (NamedTensor& t : tensors) {
        if (!by_name.emplace(t.name, &t).second) {
            throw std::runtime_error("weights: duplicate tensor " + t.name);
        }
    }
    size_t used = 0;
    auto take_vec = [&](const std::string& name, size_t want) -> std::vector<float>& {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw std::runtime_error("weights: missing tensor " + name);
        if (it->second->data.size() != want) {
            throw std::runtime_error("weights: " + name + " has " +
                                     std::to_string(it->second->data.size()) + " values, expected " +
                                     std::to_string(want));
        }
        ++used;
        return it->second->data;
    };

    for (Node& n : graph.nodes) {
        if (n.kind == NodeKind::kConv) {
            n.weight = Tensor5::from_data(n.conv.weight_shape(),
                                          take_vec(n.name + ".weight",
                                                   static_cast<size_t>(n.conv.weight_shape().numel())));
            if (n.conv.has_bias) {
                n.bias = take_vec(n.name + ".bias", static_cast<size_t>(n.conv.out_ch));
            }
        } else if (n.kind == NodeKind::kLinear) {
            n.weight = Tensor5::from_data({n.linear_out, n.linear_in, 1, 1, 1},
                                          take_vec(n.name + ".weight",
                                                   static_cast<size_t>(n.linear_out * n.linear_in)));
            n.bias = take_vec(n.name + ".bias", static_cast<size_t>(n.linear_out));
        } else if (n.kind == NodeKind::kBatchNorm) {
            const size_t c = n.bn.gamma.size();
            n.bn.gamma = take_vec(n.name + ".gamma", c);
            n.bn.beta = take_vec(n.name + ".beta", c);
            n.bn.mean = take_vec(n.name + ".mean", c);
            n.bn.var = take_vec(n.name + ".var", c);
        }
    }
    if (used != tensors.size()) {
        throw std::runtime_error("weights: file contains tensors unknown to this model");
    }
    graph.initialized = true;
}

void save_tensor(const Tensor5& t, const std::string& name, const std::string& path) {
    const Shape5 s = t.shape();
    NamedTensor nt{name,
                   {static_cast<uint32_t>(s.n), static_cast<uint32_t>(s.c),
                    static_cast<uint32_t>(s.d), static_cast<uint32_t>(s.h),
                    static_cast<uint32_t>(s.w)},
                   t.vec()};
    e3dw_write_file(path, {nt});
}

Tensor5 load_tensor(const std::string& path, const Shape5& expect) {
    auto tensors = e3dw_read_file(path);
    if (tensors.size() != 1) throw std::runtime_error("clip file must hold exactly one tensor");
    NamedTensor& t = tensors[0];
    if (t.dims.size() != 5) throw std::runtime_error("clip tensor must have rank 5");
    Shape5 s{t.dims[0], t.dims[1], t.dims[2], t.dims[3], t.dims[4]};
    if (s.c != expect.c || s.d != expect.d || s.h != expect.h || s.w != expect.w) {
        throw std::runtime_error("clip shape " + s.str() + " does not match expected " +
                                 expect.str());
    }
    return Tensor5::from_data(s, std::move(t.data));
}

} // namespace e3d
