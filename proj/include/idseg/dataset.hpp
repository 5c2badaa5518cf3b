#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <istream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "idseg/geometry.hpp"
#include "idseg/image.hpp"
#include "idseg/rng.hpp"
#include "idseg/tensor.hpp"

// Manifest ingestion, ground-truth mask rasterization and batching.
// Manifest schema: header line with columns
//   path,x0,y0,x1,y1,x2,y2,x3,y3,part,group
// tab- or comma-separated (auto-detected from the header); an optional
// leading index column is ignored.

namespace idseg {

struct ManifestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One manifest row. Quad coordinates are in original-image pixels and may
/// lie outside the frame (documents can extend past it).
struct DatasetRecord {
    std::string path;
    Quad quad;
    int part = 0;
    std::string group;
};

/// Network-ready pair: resized image, rasterized mask, plus the scaled quad
/// and the source record. Tensors carry a leading batch axis of 1.
struct Sample {
    Tensor image;      // 1 x net x net x 3, values in [0,1]
    Tensor mask;       // 1 x net x net x 1, values in {0,1}
    Quad quad_scaled;  // in network coordinates
    DatasetRecord record;
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        const size_t p = line.find(sep, start);
        if (p == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, p - start));
        start = p + 1;
    }
    return out;
}

inline double parse_coord(const std::string& field, int line_no) {
    const std::string t = trim(field);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size())
        throw ManifestError("manifest line " + std::to_string(line_no) +
                            ": non-numeric coordinate '" + t + "'");
    return v;
}

inline int parse_part(const std::string& field, int line_no) {
    const std::string t = trim(field);
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size())
        throw ManifestError("manifest line " + std::to_string(line_no) +
                            ": non-numeric part '" + t + "'");
    return static_cast<int>(v);
}

}  // namespace detail

inline const std::array<const char*, 11>& manifest_columns() {
    static const std::array<const char*, 11> cols = {
        "path", "x0", "y0", "x1", "y1", "x2", "y2", "x3", "y3", "part", "group"};
    return cols;
}

inline std::vector<DatasetRecord> parse_manifest(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw ManifestError("manifest line 1: missing header row");
    const char sep = line.find('\t') != std::string::npos ? '\t' : ',';

    std::vector<std::string> header = detail::split(line, sep);
    if (!header.empty() && detail::trim(header.front()).empty())
        header.erase(header.begin());  // leading index column
    const auto& cols = manifest_columns();
    if (header.size() != cols.size())
        throw ManifestError("manifest line 1: expected " + std::to_string(cols.size()) +
                            " columns, got " + std::to_string(header.size()));
    for (size_t i = 0; i < cols.size(); ++i)
        if (detail::trim(header[i]) != cols[i])
            throw ManifestError("manifest line 1: missing column '" + std::string(cols[i]) +
                                "' (got '" + detail::trim(header[i]) + "')");

    std::vector<DatasetRecord> records;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        std::vector<std::string> fields = detail::split(line, sep);
        if (fields.size() == cols.size() + 1) fields.erase(fields.begin());
        if (fields.size() != cols.size())
            throw ManifestError("manifest line " + std::to_string(line_no) + ": expected " +
                                std::to_string(cols.size()) + " fields, got " +
                                std::to_string(fields.size()));
        DatasetRecord rec;
        rec.path = detail::trim(fields[0]);
        for (int v = 0; v < 4; ++v) {
            rec.quad.v[static_cast<size_t>(v)].x = detail::parse_coord(fields[1 + 2 * static_cast<size_t>(v)], line_no);
            rec.quad.v[static_cast<size_t>(v)].y = detail::parse_coord(fields[2 + 2 * static_cast<size_t>(v)], line_no);
        }
        rec.part = detail::parse_part(fields[9], line_no);
        rec.group = detail::trim(fields[10]);
        records.push_back(std::move(rec));
    }
    return records;
}

inline std::vector<DatasetRecord> parse_manifest_text(const std::string& text) {
    std::istringstream in(text);
    return parse_manifest(in);
}

inline std::vector<DatasetRecord> parse_manifest_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ManifestError("cannot open manifest: " + path.string());
    return parse_manifest(in);
}

inline std::string serialize_manifest(std::span<const DatasetRecord> records, char sep = '\t') {
    std::string out;
    const auto& cols = manifest_columns();
    for (size_t i = 0; i < cols.size(); ++i) {
        if (i) out += sep;
        out += cols[i];
    }
    out += '\n';
    char buf[64];
    for (const DatasetRecord& r : records) {
        out += r.path;
        for (const Point& p : r.quad.v) {
            std::snprintf(buf, sizeof buf, "%.10g", p.x);
            out += sep;
            out += buf;
            std::snprintf(buf, sizeof buf, "%.10g", p.y);
            out += sep;
            out += buf;
        }
        out += sep;
        out += std::to_string(r.part);
        out += sep;
        out += r.group;
        out += '\n';
    }
    return out;
}

/// Pixel (r,c) is foreground iff its center (c+0.5, r+0.5) lies inside the
/// quad by the even-odd rule; points exactly on an edge count as inside.
inline Tensor rasterize_quad(const Quad& quad, int h, int w) {
    for (const Point& p : quad.v)
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw std::invalid_argument("rasterize_quad: vertices must be finite");
    Tensor mask({1, h, w, 1});
    const std::span<const Point> poly(quad.v);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (point_in_polygon(poly, {c + 0.5, r + 0.5})) mask.at(0, r, c, 0) = 1.0f;
    return mask;
}

/// load -> resize to net x net -> scale quad -> rasterize.
inline Sample make_sample(const DatasetRecord& record, const std::filesystem::path& data_root,
                          int net_size = 128) {
    Tensor full;
    try {
        full = load_image(data_root / record.path);
    } catch (const ImageError& e) {
        throw ImageError("record '" + record.path + "': " + e.what());
    }
    const int h = full.shape[1], w = full.shape[2];
    Sample s;
    s.record = record;
    s.image = resize_bilinear(full, net_size, net_size);
    s.quad_scaled = scale_quad(record.quad, static_cast<double>(net_size) / w,
                               static_cast<double>(net_size) / h);
    s.mask = rasterize_quad(s.quad_scaled, net_size, net_size);
    return s;
}

inline std::vector<std::vector<int>> batch_indices(int n, int batch_size, uint64_t seed,
                                                   bool shuffle) {
    if (batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
    std::vector<int> order;
    if (shuffle) {
        Rng rng(seed);
        order = rng.permutation(n);
    } else {
        order.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    }
    std::vector<std::vector<int>> out;
    for (int start = 0; start < n; start += batch_size) {
        const int end = std::min(n, start + batch_size);
        out.emplace_back(order.begin() + start, order.begin() + end);
    }
    return out;
}

inline std::pair<Tensor, Tensor> assemble_batch(std::span<const Sample> samples,
                                                std::span<const int> idx) {
    const int n = static_cast<int>(idx.size());
    const auto& first = samples[static_cast<size_t>(idx[0])];
    const int h = first.image.shape[1], w = first.image.shape[2];
    Tensor images({n, h, w, 3});
    Tensor masks({n, h, w, 1});
    const size_t img_len = first.image.data.size();
    const size_t mask_len = first.mask.data.size();
    for (int i = 0; i < n; ++i) {
        const Sample& s = samples[static_cast<size_t>(idx[static_cast<size_t>(i)])];
        std::copy(s.image.data.begin(), s.image.data.end(),
                  images.data.begin() + static_cast<std::ptrdiff_t>(img_len * static_cast<size_t>(i)));
        std::copy(s.mask.data.begin(), s.mask.data.end(),
                  masks.data.begin() + static_cast<std::ptrdiff_t>(mask_len * static_cast<size_t>(i)));
    }
    return {std::move(images), std::move(masks)};
}

/// Seeded batching; the final batch may be short.
inline std::vector<std::pair<Tensor, Tensor>> batches(std::span<const Sample> samples,
                                                      int batch_size, uint64_t seed,
                                                      bool shuffle) {
    std::vector<std::pair<Tensor, Tensor>> out;
    for (const auto& idx : batch_indices(static_cast<int>(samples.size()), batch_size, seed, shuffle))
        out.push_back(assemble_batch(samples, idx));
    return out;
}

}  // namespace idseg
