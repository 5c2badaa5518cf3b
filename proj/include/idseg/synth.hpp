#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "idseg/dataset.hpp"
#include "idseg/geometry.hpp"
#include "idseg/image.hpp"
#include "idseg/rng.hpp"

// Seeded synthetic scenes for desk-scale training: a solid background with
// noise and distractor rectangles, plus one perspective-jittered document
// rectangle filled with a contrasting color and dark text-like line segments.

namespace idseg {

struct SynthParams {
    int count_train = 512;
    int count_test = 128;
    int image_size = 128;
    uint64_t seed = 42;
    double clutter_level = 0.5;  // scales distractor count and noise amplitude
};

namespace detail {

struct FloatImage {
    int h = 0, w = 0;
    std::vector<float> rgb;  // h*w*3

    FloatImage(int height, int width) : h(height), w(width), rgb(static_cast<size_t>(height) * width * 3, 0.0f) {}
    float* px(int r, int c) { return &rgb[(static_cast<size_t>(r) * w + c) * 3]; }
};

inline void fill_rect(FloatImage& img, int x0, int y0, int x1, int y1, const float color[3]) {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, img.w);
    y1 = std::min(y1, img.h);
    for (int r = y0; r < y1; ++r)
        for (int c = x0; c < x1; ++c)
            for (int k = 0; k < 3; ++k) img.px(r, c)[k] = color[k];
}

inline void fill_quad(FloatImage& img, const Quad& q, const float color[3]) {
    const std::span<const Point> poly(q.v);
    for (int r = 0; r < img.h; ++r)
        for (int c = 0; c < img.w; ++c)
            if (point_in_polygon(poly, {c + 0.5, r + 0.5}))
                for (int k = 0; k < 3; ++k) img.px(r, c)[k] = color[k];
}

inline void draw_segment(FloatImage& img, Point a, Point b, const float color[3]) {
    const int steps = static_cast<int>(std::hypot(b.x - a.x, b.y - a.y)) + 1;
    for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        const int px = static_cast<int>(std::lround(a.x + t * (b.x - a.x)));
        const int py = static_cast<int>(std::lround(a.y + t * (b.y - a.y)));
        if (px < 0 || px >= img.w || py < 0 || py >= img.h) continue;
        for (int k = 0; k < 3; ++k) img.px(py, px)[k] = color[k];
    }
}

inline double luminance(const float c[3]) {
    return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
}

/// Bilinear point on the quad: u across the top/bottom edges, v down.
inline Point quad_lerp(const Quad& q, double u, double v) {
    const Point top{q.v[0].x + u * (q.v[1].x - q.v[0].x), q.v[0].y + u * (q.v[1].y - q.v[0].y)};
    const Point bot{q.v[3].x + u * (q.v[2].x - q.v[3].x), q.v[3].y + u * (q.v[2].y - q.v[3].y)};
    return {top.x + v * (bot.x - top.x), top.y + v * (bot.y - top.y)};
}

struct Scene {
    FloatImage image;
    Quad quad;
};

inline Scene make_scene(Rng& rng, int size, double clutter) {
    FloatImage img(size, size);

    // documents read like light cards; the background must contrast with one
    float doc[3];
    do {
        for (float& c : doc) c = static_cast<float>(rng.uniform(0.45, 1.0));
    } while (luminance(doc) < 0.55);
    float bg[3];
    do {
        for (float& c : bg) c = static_cast<float>(rng.uniform());
    } while (std::abs(luminance(doc) - luminance(bg)) < 0.35);

    // background: solid color + additive uniform noise + distractor rectangles
    fill_rect(img, 0, 0, size, size, bg);
    const double amp = 0.10 * clutter;
    if (amp > 0.0)
        for (float& v : img.rgb)
            v = std::clamp(v + static_cast<float>(rng.uniform(-amp, amp)), 0.0f, 1.0f);
    const int n_distract = static_cast<int>(std::lround(clutter * 8.0));
    for (int i = 0; i < n_distract; ++i) {
        float color[3];
        for (float& c : color) c = static_cast<float>(rng.uniform());
        const int dw = static_cast<int>(rng.uniform(0.05, 0.20) * size);
        const int dh = static_cast<int>(rng.uniform(0.05, 0.20) * size);
        const int x = rng.uniform_int(0, size - 1);
        const int y = rng.uniform_int(0, size - 1);
        fill_rect(img, x, y, x + dw, y + dh, color);
    }

    // document rectangle with jittered corners, convex and big enough,
    // drawn over background and distractors
    Quad quad;
    const double min_area = 0.05 * size * size + 1.0;
    for (;;) {
        const double dw = rng.uniform(0.25, 0.70) * size;
        const double dh = rng.uniform(0.25, 0.70) * size;
        const double jitter = 0.10 * std::min(dw, dh);
        const double margin = jitter + 2.0;
        if (size - dw - 2 * margin <= 1 || size - dh - 2 * margin <= 1) continue;
        const double x0 = rng.uniform(margin, size - dw - margin);
        const double y0 = rng.uniform(margin, size - dh - margin);
        const Point corners[4] = {{x0, y0}, {x0 + dw, y0}, {x0 + dw, y0 + dh}, {x0, y0 + dh}};
        for (size_t k = 0; k < 4; ++k)
            quad.v[k] = {corners[k].x + rng.uniform(-jitter, jitter),
                         corners[k].y + rng.uniform(-jitter, jitter)};
        if (!is_convex(std::span<const Point>(quad.v))) continue;
        if (quad_area(quad) < min_area) continue;
        break;
    }

    fill_quad(img, quad, doc);

    // thin dark text-like lines, inset so they stay clear of the border
    const float ink_level = static_cast<float>(rng.uniform(0.10, 0.30));
    const float ink[3] = {ink_level, ink_level, ink_level};
    const int n_lines = rng.uniform_int(2, 4);
    for (int i = 0; i < n_lines; ++i) {
        const double v = 0.2 + 0.6 * i / std::max(1, n_lines - 1);
        const double u0 = rng.uniform(0.15, 0.25);
        const double u1 = std::min(u0 + rng.uniform(0.30, 0.65), 0.85);
        draw_segment(img, quad_lerp(quad, u0, v), quad_lerp(quad, u1, v), ink);
    }

    return {std::move(img), quad};
}

inline ImageU8 quantize(const FloatImage& fimg) {
    ImageU8 img(fimg.h, fimg.w, 3);
    for (size_t i = 0; i < fimg.rgb.size(); ++i)
        img.pixels[i] = static_cast<uint8_t>(std::lround(std::clamp(fimg.rgb[i], 0.0f, 1.0f) * 255.0f));
    return img;
}

}  // namespace detail

/// Writes count_train + count_test PNG scenes plus a manifest whose part
/// column encodes the split (1 = train, 2 = test). Fully determined by the
/// seed. Returns the manifest path.
inline std::filesystem::path generate_synthetic(const SynthParams& params,
                                                const std::filesystem::path& out_dir) {
    if (params.count_train < 0 || params.count_test < 0)
        throw std::invalid_argument("generate_synthetic: counts must be >= 0");
    if (params.image_size < 32)
        throw std::invalid_argument("generate_synthetic: image_size must be >= 32");

    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    if (ec) throw std::runtime_error("cannot create output directory: " + (out_dir / "images").string());

    Rng rng(params.seed);
    std::vector<DatasetRecord> records;
    const int total = params.count_train + params.count_test;
    char name[64];
    for (int i = 0; i < total; ++i) {
        detail::Scene scene = detail::make_scene(rng, params.image_size, params.clutter_level);
        std::snprintf(name, sizeof name, "images/synth_%05d.png", i);
        write_png(out_dir / name, detail::quantize(scene.image));

        DatasetRecord rec;
        rec.path = name;
        for (size_t k = 0; k < 4; ++k)
            rec.quad.v[k] = {std::round(scene.quad.v[k].x * 100.0) / 100.0,
                             std::round(scene.quad.v[k].y * 100.0) / 100.0};
        rec.part = i < params.count_train ? 1 : 2;
        rec.group = "synth";
        records.push_back(std::move(rec));
    }

    const std::filesystem::path manifest_path = out_dir / "manifest.tsv";
    std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest: " + manifest_path.string());
    out << serialize_manifest(records, '\t');
    if (!out) throw std::runtime_error("manifest write failed: " + manifest_path.string());
    return manifest_path;
}

}  // namespace idseg
