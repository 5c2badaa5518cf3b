#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "idseg/model.hpp"

// Model file format, little-endian, no alignment padding:
//   magic "IDSG", u16 version = 1, u32 layer count;
//   per layer: u8 kind tag, u16 rank, u32 dims[rank],
//              then f32 payload (weights then bias) for parameterized kinds;
//   trailing CRC32 of all preceding bytes.
//
// dims per kind: input [h,w,c]; conv/tconv/output_conv [kh,kw,cin,cout,stride];
// dense [din,dout]; flatten []; broadcast [h,w]; concat [ref_layer].

namespace idseg {

enum class ModelIoStatus {
    ok,
    bad_magic,
    bad_version,
    bad_checksum,
    truncated,
    bad_layer,
    io_failure,
};

struct ModelIoError : std::runtime_error {
    ModelIoStatus status;
    ModelIoError(ModelIoStatus s, const std::string& msg) : std::runtime_error(msg), status(s) {}
};

namespace detail {

inline void put_u16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(static_cast<uint8_t>(v & 0xff));
    b.push_back(static_cast<uint8_t>(v >> 8));
}

inline void put_u32(std::vector<uint8_t>& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::vector<uint8_t>& b, float v) {
    put_u32(b, std::bit_cast<uint32_t>(v));
}

struct Reader {
    const uint8_t* p;
    size_t n;
    size_t pos = 0;

    void need(size_t k) const {
        if (pos + k > n) throw ModelIoError(ModelIoStatus::truncated, "model file truncated");
    }
    uint8_t u8() {
        need(1);
        return p[pos++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(p[pos] | (p[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
};

inline std::vector<uint32_t> layer_dims(const LayerSpec& l, const LayerShape& in) {
    switch (l.kind) {
        case LayerKind::input:
            return {static_cast<uint32_t>(l.height), static_cast<uint32_t>(l.width),
                    static_cast<uint32_t>(l.channels)};
        case LayerKind::conv:
            return {static_cast<uint32_t>(l.kernel), static_cast<uint32_t>(l.kernel),
                    static_cast<uint32_t>(in.c), static_cast<uint32_t>(l.channels),
                    static_cast<uint32_t>(l.stride)};
        case LayerKind::tconv:
            return {3u, 3u, static_cast<uint32_t>(in.c), static_cast<uint32_t>(l.channels), 2u};
        case LayerKind::output_conv:
            return {1u, 1u, static_cast<uint32_t>(in.c), static_cast<uint32_t>(l.channels), 1u};
        case LayerKind::dense:
            return {static_cast<uint32_t>(in.c), static_cast<uint32_t>(l.channels)};
        case LayerKind::flatten:
            return {};
        case LayerKind::broadcast:
            return {static_cast<uint32_t>(l.height), static_cast<uint32_t>(l.width)};
        case LayerKind::concat:
            return {static_cast<uint32_t>(l.with_layer)};
    }
    return {};
}

}  // namespace detail

inline void save_model(const Model& model, const std::filesystem::path& path) {
    const auto shapes = layer_output_shapes(model.config);
    std::vector<uint8_t> buf;
    buf.reserve(static_cast<size_t>(model.param_count) * 4 + 1024);
    buf.insert(buf.end(), {'I', 'D', 'S', 'G'});
    detail::put_u16(buf, 1);
    detail::put_u32(buf, static_cast<uint32_t>(model.config.layers.size()));
    for (size_t i = 0; i < model.config.layers.size(); ++i) {
        const LayerSpec& l = model.config.layers[i];
        const auto dims = detail::layer_dims(l, i > 0 ? shapes[i - 1] : LayerShape{});
        buf.push_back(static_cast<uint8_t>(l.kind));
        detail::put_u16(buf, static_cast<uint16_t>(dims.size()));
        for (uint32_t d : dims) detail::put_u32(buf, d);
        if (model.params[i].has_params()) {
            for (float w : model.params[i].weights.data) detail::put_f32(buf, w);
            for (float b : model.params[i].bias.data) detail::put_f32(buf, b);
        }
    }
    const uint32_t crc = static_cast<uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size())));
    detail::put_u32(buf, crc);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelIoError(ModelIoStatus::io_failure, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw ModelIoError(ModelIoStatus::io_failure, "write failed: " + path.string());
}

inline Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelIoError(ModelIoStatus::io_failure, "cannot open " + path.string());
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 14) throw ModelIoError(ModelIoStatus::truncated, "model file truncated");
    detail::Reader r{buf.data(), buf.size() - 4};  // trailing CRC read separately
    if (r.u8() != 'I' || r.u8() != 'D' || r.u8() != 'S' || r.u8() != 'G')
        throw ModelIoError(ModelIoStatus::bad_magic, "not a model file (bad magic)");
    const uint16_t version = r.u16();
    if (version != 1)
        throw ModelIoError(ModelIoStatus::bad_version,
                           "unsupported model format version " + std::to_string(version));

    const uint32_t layer_count = r.u32();
    if (layer_count == 0 || layer_count > 10000)
        throw ModelIoError(ModelIoStatus::bad_layer, "implausible layer count");

    ModelConfig config;
    std::vector<std::vector<float>> payloads(layer_count);
    for (uint32_t i = 0; i < layer_count; ++i) {
        const uint8_t tag = r.u8();
        if (tag > static_cast<uint8_t>(LayerKind::output_conv))
            throw ModelIoError(ModelIoStatus::bad_layer, "unknown layer kind tag");
        const LayerKind kind = static_cast<LayerKind>(tag);
        const uint16_t rank = r.u16();
        if (rank > 8) throw ModelIoError(ModelIoStatus::bad_layer, "implausible dim count");
        std::vector<uint32_t> dims(rank);
        for (auto& d : dims) {
            d = r.u32();
            if (d > (1u << 24)) throw ModelIoError(ModelIoStatus::bad_layer, "implausible dimension");
        }

        LayerSpec l;
        l.kind = kind;
        int64_t weight_count = 0, bias_count = 0;
        switch (kind) {
            case LayerKind::input:
                if (rank != 3) throw ModelIoError(ModelIoStatus::bad_layer, "input needs 3 dims");
                l.height = static_cast<int>(dims[0]);
                l.width = static_cast<int>(dims[1]);
                l.channels = static_cast<int>(dims[2]);
                break;
            case LayerKind::conv:
            case LayerKind::tconv:
            case LayerKind::output_conv:
                if (rank != 5) throw ModelIoError(ModelIoStatus::bad_layer, "conv needs 5 dims");
                l.kernel = static_cast<int>(dims[0]);
                l.channels = static_cast<int>(dims[3]);
                l.stride = static_cast<int>(dims[4]);
                weight_count = static_cast<int64_t>(dims[0]) * dims[1] * dims[2] * dims[3];
                bias_count = dims[3];
                break;
            case LayerKind::dense:
                if (rank != 2) throw ModelIoError(ModelIoStatus::bad_layer, "dense needs 2 dims");
                l.channels = static_cast<int>(dims[1]);
                weight_count = static_cast<int64_t>(dims[0]) * dims[1];
                bias_count = dims[1];
                break;
            case LayerKind::flatten:
                if (rank != 0) throw ModelIoError(ModelIoStatus::bad_layer, "flatten takes no dims");
                break;
            case LayerKind::broadcast:
                if (rank != 2) throw ModelIoError(ModelIoStatus::bad_layer, "broadcast needs 2 dims");
                l.height = static_cast<int>(dims[0]);
                l.width = static_cast<int>(dims[1]);
                break;
            case LayerKind::concat:
                if (rank != 1) throw ModelIoError(ModelIoStatus::bad_layer, "concat needs 1 dim");
                l.with_layer = static_cast<int>(dims[0]);
                break;
        }
        config.layers.push_back(l);
        payloads[i].resize(static_cast<size_t>(weight_count + bias_count));
        for (auto& f : payloads[i]) f = r.f32();
    }
    if (r.pos != r.n)
        throw ModelIoError(ModelIoStatus::bad_layer, "trailing bytes after last layer");

    const uint32_t stored_crc = static_cast<uint32_t>(buf[buf.size() - 4]) |
                                (static_cast<uint32_t>(buf[buf.size() - 3]) << 8) |
                                (static_cast<uint32_t>(buf[buf.size() - 2]) << 16) |
                                (static_cast<uint32_t>(buf[buf.size() - 1]) << 24);
    const uint32_t crc = static_cast<uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size() - 4)));
    if (crc != stored_crc)
        throw ModelIoError(ModelIoStatus::bad_checksum, "model file checksum mismatch");

    std::vector<LayerShape> shapes;
    try {
        shapes = layer_output_shapes(config);
    } catch (const ConfigError& e) {
        throw ModelIoError(ModelIoStatus::bad_layer, std::string("invalid model wiring: ") + e.what());
    }

    Model model;
    model.config = config;
    model.params.resize(config.layers.size());
    for (size_t i = 1; i < config.layers.size(); ++i) {
        const LayerSpec& l = config.layers[i];
        const LayerShape& in = shapes[i - 1];
        LayerParams<float>& p = model.params[i];
        switch (l.kind) {
            case LayerKind::conv:
            case LayerKind::output_conv: {
                const int k = l.kind == LayerKind::output_conv ? 1 : l.kernel;
                p.weights = Tensor({k, k, in.c, l.channels});
                break;
            }
            case LayerKind::tconv:
                p.weights = Tensor({3, 3, in.c, l.channels});
                break;
            case LayerKind::dense:
                p.weights = Tensor({in.c, l.channels});
                break;
            default:
                continue;
        }
        p.bias = Tensor({l.channels});
        const size_t wn = p.weights.data.size();
        if (payloads[i].size() != wn + p.bias.data.size())
            throw ModelIoError(ModelIoStatus::bad_layer, "payload size does not match layer dims");
        std::copy(payloads[i].begin(), payloads[i].begin() + static_cast<std::ptrdiff_t>(wn),
                  p.weights.data.begin());
        std::copy(payloads[i].begin() + static_cast<std::ptrdiff_t>(wn), payloads[i].end(),
                  p.bias.data.begin());
        model.param_count += p.weights.size() + p.bias.size();
    }
    return model;
}

}  // namespace idseg
