#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "idseg/geometry.hpp"
#include "idseg/tensor.hpp"

// Image I/O: 8-bit PNG (gray/RGB/RGBA, alpha dropped) and binary PPM/PGM.
// The PNG container is handled here directly; zlib does the compression.

namespace idseg {

struct ImageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Interleaved 8-bit image, c is 1 (gray) or 3 (RGB).
struct ImageU8 {
    int h = 0, w = 0, c = 0;
    std::vector<uint8_t> pixels;

    ImageU8() = default;
    ImageU8(int height, int width, int channels)
        : h(height), w(width), c(channels),
          pixels(static_cast<size_t>(height) * width * channels, 0) {}

    uint8_t& at(int r, int col, int ch) {
        return pixels[(static_cast<size_t>(r) * w + col) * c + ch];
    }
    uint8_t at(int r, int col, int ch) const {
        return pixels[(static_cast<size_t>(r) * w + col) * c + ch];
    }
};

namespace detail {

inline std::vector<uint8_t> zlib_inflate(const uint8_t* data, size_t n, size_t expected) {
    std::vector<uint8_t> out(expected);
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) throw ImageError("zlib init failed");
    zs.next_in = const_cast<Bytef*>(data);
    zs.avail_in = static_cast<uInt>(n);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.avail_out != 0)
        throw ImageError("PNG image data is corrupt or truncated");
    return out;
}

inline std::vector<uint8_t> zlib_deflate(const uint8_t* data, size_t n) {
    uLongf bound = compressBound(static_cast<uLong>(n));
    std::vector<uint8_t> out(bound);
    if (compress2(out.data(), &bound, data, static_cast<uLong>(n), 6) != Z_OK)
        throw ImageError("zlib compression failed");
    out.resize(bound);
    return out;
}

inline uint32_t be32(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

inline void put_be32(std::vector<uint8_t>& b, uint32_t v) {
    b.push_back(static_cast<uint8_t>(v >> 24));
    b.push_back(static_cast<uint8_t>(v >> 16));
    b.push_back(static_cast<uint8_t>(v >> 8));
    b.push_back(static_cast<uint8_t>(v));
}

inline void png_chunk(std::vector<uint8_t>& out, const char type[4],
                      const uint8_t* data, size_t n) {
    put_be32(out, static_cast<uint32_t>(n));
    const size_t type_pos = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data, data + n);
    uint32_t crc = static_cast<uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(out.data() + type_pos), static_cast<uInt>(4 + n)));
    put_be32(out, crc);
}

inline int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

}  // namespace detail

inline constexpr uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

inline ImageU8 decode_png(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSignature, 8) != 0)
        throw ImageError("not a PNG file");

    int w = 0, h = 0, bit_depth = 0, color_type = 0;
    std::vector<uint8_t> idat;
    size_t pos = 8;
    bool seen_iend = false;
    while (pos + 12 <= bytes.size() && !seen_iend) {
        const uint32_t len = detail::be32(&bytes[pos]);
        if (pos + 12 + len > bytes.size()) throw ImageError("PNG file truncated");
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const uint8_t* data = &bytes[pos + 8];
        const uint32_t stored = detail::be32(&bytes[pos + 8 + len]);
        const uint32_t crc = static_cast<uint32_t>(
            crc32(0L, reinterpret_cast<const Bytef*>(&bytes[pos + 4]), static_cast<uInt>(4 + len)));
        if (crc != stored) throw ImageError("PNG chunk checksum mismatch");

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw ImageError("bad PNG header");
            w = static_cast<int>(detail::be32(data));
            h = static_cast<int>(detail::be32(data + 4));
            bit_depth = data[8];
            color_type = data[9];
            if (data[12] != 0) throw ImageError("interlaced PNG is not supported");
            if (bit_depth != 8) throw ImageError("only 8-bit PNG is supported");
            if (color_type != 0 && color_type != 2 && color_type != 4 && color_type != 6)
                throw ImageError("unsupported PNG color type " + std::to_string(color_type));
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            seen_iend = true;
        }
        pos += 12 + len;
    }
    if (w <= 0 || h <= 0) throw ImageError("PNG missing header");
    if (!seen_iend) throw ImageError("PNG file truncated");

    const int src_ch = color_type == 0 ? 1 : color_type == 2 ? 3 : color_type == 4 ? 2 : 4;
    const size_t stride = static_cast<size_t>(w) * src_ch;
    std::vector<uint8_t> raw = detail::zlib_inflate(idat.data(), idat.size(),
                                                    static_cast<size_t>(h) * (stride + 1));

    // undo per-row filtering in place
    std::vector<uint8_t> prev(stride, 0);
    std::vector<uint8_t> row(stride);
    const int out_ch = src_ch == 1 || src_ch == 2 ? 1 : 3;
    ImageU8 img(h, w, out_ch);
    for (int r = 0; r < h; ++r) {
        const uint8_t* src = &raw[static_cast<size_t>(r) * (stride + 1)];
        const uint8_t filter = src[0];
        std::memcpy(row.data(), src + 1, stride);
        for (size_t i = 0; i < stride; ++i) {
            const int left = i >= static_cast<size_t>(src_ch) ? row[i - src_ch] : 0;
            const int up = prev[i];
            const int ul = i >= static_cast<size_t>(src_ch) ? prev[i - src_ch] : 0;
            switch (filter) {
                case 0: break;
                case 1: row[i] = static_cast<uint8_t>(row[i] + left); break;
                case 2: row[i] = static_cast<uint8_t>(row[i] + up); break;
                case 3: row[i] = static_cast<uint8_t>(row[i] + (left + up) / 2); break;
                case 4: row[i] = static_cast<uint8_t>(row[i] + detail::paeth(left, up, ul)); break;
                default: throw ImageError("unknown PNG filter type");
            }
        }
        for (int col = 0; col < w; ++col)
            for (int ch = 0; ch < out_ch; ++ch)
                img.at(r, col, ch) = row[static_cast<size_t>(col) * src_ch + ch];
        prev = row;
    }
    return img;
}

inline std::vector<uint8_t> encode_png(const ImageU8& img) {
    if (img.c != 1 && img.c != 3) throw ImageError("encode_png: image must have 1 or 3 channels");
    std::vector<uint8_t> out(kPngSignature, kPngSignature + 8);

    uint8_t ihdr[13];
    ihdr[0] = static_cast<uint8_t>(img.w >> 24);
    ihdr[1] = static_cast<uint8_t>(img.w >> 16);
    ihdr[2] = static_cast<uint8_t>(img.w >> 8);
    ihdr[3] = static_cast<uint8_t>(img.w);
    ihdr[4] = static_cast<uint8_t>(img.h >> 24);
    ihdr[5] = static_cast<uint8_t>(img.h >> 16);
    ihdr[6] = static_cast<uint8_t>(img.h >> 8);
    ihdr[7] = static_cast<uint8_t>(img.h);
    ihdr[8] = 8;
    ihdr[9] = img.c == 1 ? 0 : 2;
    ihdr[10] = ihdr[11] = ihdr[12] = 0;
    detail::png_chunk(out, "IHDR", ihdr, 13);

    const size_t stride = static_cast<size_t>(img.w) * img.c;
    std::vector<uint8_t> raw;
    raw.reserve(static_cast<size_t>(img.h) * (stride + 1));
    for (int r = 0; r < img.h; ++r) {
        raw.push_back(0);  // filter: none
        const uint8_t* rp = img.pixels.data() + static_cast<size_t>(r) * stride;
        raw.insert(raw.end(), rp, rp + stride);
    }
    const std::vector<uint8_t> compressed = detail::zlib_deflate(raw.data(), raw.size());
    detail::png_chunk(out, "IDAT", compressed.data(), compressed.size());
    detail::png_chunk(out, "IEND", nullptr, 0);
    return out;
}

namespace detail {

inline ImageU8 decode_pnm(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 2) throw ImageError("not a PNM file");
    const bool rgb = bytes[1] == '6';
    if (bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw ImageError("unsupported PNM type (only binary P5/P6)");

    size_t pos = 2;
    const auto next_int = [&]() {
        // skip whitespace and # comments
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) throw ImageError("bad PNM header");
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
        return v;
    };
    const long w = next_int(), h = next_int(), maxval = next_int();
    if (w <= 0 || h <= 0) throw ImageError("bad PNM dimensions");
    if (maxval != 255) throw ImageError("only 8-bit PNM is supported");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw ImageError("bad PNM header");
    ++pos;

    const int ch = rgb ? 3 : 1;
    const size_t need = static_cast<size_t>(w) * static_cast<size_t>(h) * ch;
    if (bytes.size() - pos < need) throw ImageError("PNM file truncated");
    ImageU8 img(static_cast<int>(h), static_cast<int>(w), ch);
    std::memcpy(img.pixels.data(), bytes.data() + pos, need);
    return img;
}

}  // namespace detail

inline std::vector<uint8_t> encode_pnm(const ImageU8& img) {
    std::string header = std::string(img.c == 3 ? "P6" : "P5") + "\n" + std::to_string(img.w) +
                         " " + std::to_string(img.h) + "\n255\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

inline std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageError("cannot open image file: " + path.string());
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ImageError("cannot open file for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ImageError("write failed: " + path.string());
}

/// Reads PNG or binary PPM/PGM, dispatching on the file magic.
inline ImageU8 read_image(const std::filesystem::path& path) {
    const std::vector<uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0)
        return decode_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
        return detail::decode_pnm(bytes);
    throw ImageError("unsupported image format: " + path.string());
}

inline void write_png(const std::filesystem::path& path, const ImageU8& img) {
    write_file_bytes(path, encode_png(img));
}

inline void write_pnm(const std::filesystem::path& path, const ImageU8& img) {
    write_file_bytes(path, encode_pnm(img));
}

/// 8-bit channels mapped to [0,1] by /255; grayscale replicated to 3 channels.
/// Result is 1 x h x w x 3.
inline Tensor image_to_tensor(const ImageU8& img) {
    Tensor t({1, img.h, img.w, 3});
    for (int r = 0; r < img.h; ++r)
        for (int col = 0; col < img.w; ++col)
            for (int ch = 0; ch < 3; ++ch)
                t.at(0, r, col, ch) =
                    static_cast<float>(img.at(r, col, img.c == 1 ? 0 : ch)) / 255.0f;
    return t;
}

inline ImageU8 tensor_to_image(const Tensor& t) {
    if (t.rank() != 4 || t.shape[0] != 1 || (t.shape[3] != 1 && t.shape[3] != 3))
        throw ShapeError("tensor_to_image: expected 1xhxwx1 or 1xhxwx3, got " + shape_str(t.shape));
    ImageU8 img(t.shape[1], t.shape[2], t.shape[3]);
    for (size_t i = 0; i < t.data.size(); ++i) {
        const float v = std::clamp(t.data[i], 0.0f, 1.0f);
        img.pixels[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
    return img;
}

inline Tensor load_image(const std::filesystem::path& path) {
    return image_to_tensor(read_image(path));
}

/// Bilinear resize with pixel-center alignment: output (r,c) samples source
/// coordinate ((r+0.5)*h/out_h - 0.5, (c+0.5)*w/out_w - 0.5), clamped.
template <class T>
TensorT<T> resize_bilinear(const TensorT<T>& img, int out_h, int out_w) {
    if (img.rank() != 4) throw ShapeError("resize_bilinear: expected a rank-4 image tensor");
    if (out_h <= 0 || out_w <= 0) throw ShapeError("resize_bilinear: output size must be positive");
    const int n = img.shape[0], h = img.shape[1], w = img.shape[2], c = img.shape[3];
    TensorT<T> out({n, out_h, out_w, c});
    for (int b = 0; b < n; ++b) {
        for (int r = 0; r < out_h; ++r) {
            double sy = (r + 0.5) * static_cast<double>(h) / out_h - 0.5;
            sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
            const int y0 = static_cast<int>(sy);
            const int y1 = std::min(y0 + 1, h - 1);
            const double fy = sy - y0;
            for (int col = 0; col < out_w; ++col) {
                double sx = (col + 0.5) * static_cast<double>(w) / out_w - 0.5;
                sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
                const int x0 = static_cast<int>(sx);
                const int x1 = std::min(x0 + 1, w - 1);
                const double fx = sx - x0;
                for (int ch = 0; ch < c; ++ch) {
                    const double v00 = static_cast<double>(img.at(b, y0, x0, ch));
                    const double v01 = static_cast<double>(img.at(b, y0, x1, ch));
                    const double v10 = static_cast<double>(img.at(b, y1, x0, ch));
                    const double v11 = static_cast<double>(img.at(b, y1, x1, ch));
                    const double top = v00 + (v01 - v00) * fx;
                    const double bot = v10 + (v11 - v10) * fx;
                    out.at(b, r, col, ch) = static_cast<T>(top + (bot - top) * fy);
                }
            }
        }
    }
    return out;
}

/// Bresenham segment with a 2x2 pen.
inline void draw_line(ImageU8& img, int x0, int y0, int x1, int y1,
                      uint8_t r, uint8_t g, uint8_t b) {
    const auto plot = [&](int x, int y) {
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                const int px = x + dx, py = y + dy;
                if (px < 0 || px >= img.w || py < 0 || py >= img.h) continue;
                img.at(py, px, 0) = r;
                if (img.c == 3) {
                    img.at(py, px, 1) = g;
                    img.at(py, px, 2) = b;
                }
            }
    };
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    int x = x0, y = y0;
    while (true) {
        plot(x, y);
        if (x == x1 && y == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y += sy;
        }
    }
}

inline void draw_quad(ImageU8& img, const Quad& q, uint8_t r, uint8_t g, uint8_t b) {
    for (size_t i = 0; i < 4; ++i) {
        const Point& a = q.v[i];
        const Point& c = q.v[(i + 1) % 4];
        draw_line(img, static_cast<int>(std::lround(a.x)), static_cast<int>(std::lround(a.y)),
                  static_cast<int>(std::lround(c.x)), static_cast<int>(std::lround(c.y)), r, g, b);
    }
}

}  // namespace idseg
