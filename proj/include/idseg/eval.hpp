#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "idseg/dataset.hpp"
#include "idseg/geometry.hpp"
#include "idseg/loss.hpp"
#include "idseg/model.hpp"
#include "idseg/rng.hpp"

// End-to-end detection and the evaluation harness: per-image IoU against
// ground truth, the accuracy-versus-IoU-threshold curve, aggregated pixel
// confusion metrics and latency statistics.

namespace idseg {

struct Detection {
    DatasetRecord record;
    std::optional<Quad> predicted;  // original-image coordinates
    double iou = 0.0;               // 0 whenever predicted is absent
    double latency_ms = 0.0;
};

struct Timing {
    double mean_ms = 0.0, p50_ms = 0.0, p95_ms = 0.0;
};

struct EvalReport {
    std::vector<Detection> detections;
    std::vector<std::pair<double, double>> curve;  // (threshold, accuracy)
    PixelMetrics pixel;
    Timing timing;
    int load_failures = 0;
};

struct DetectResult {
    std::optional<Quad> quad;  // in the source image's coordinates
    Tensor prob_map;           // at network resolution
};

/// resize -> forward -> threshold 0.5 -> contours -> quad selection ->
/// rescale back to the source image. Empty optional when nothing survives.
inline DetectResult detect_single(const Model& model, const Tensor& image) {
    if (image.rank() != 4 || image.shape[0] != 1 || image.shape[3] != 3)
        throw ShapeError("detect_single: expected a 1xhxwx3 image, got " + shape_str(image.shape));
    const int src_h = image.shape[1], src_w = image.shape[2];
    const int net_h = model.config.input_height(), net_w = model.config.input_width();

    const Tensor resized = resize_bilinear(image, net_h, net_w);
    DetectResult result;
    result.prob_map = forward(model, resized);
    const BinaryMask mask = threshold_map(result.prob_map, 0.5);
    const std::vector<Contour> contours = extract_contours(mask);
    const std::optional<Quad> quad = select_document_quad(contours, mask.h, mask.w);
    if (quad)
        result.quad = scale_quad(*quad, static_cast<double>(src_w) / net_w,
                                 static_cast<double>(src_h) / net_h);
    return result;
}

/// accuracy(tau) = |{detections with iou >= tau}| / |detections|; misses
/// carry iou 0, so accuracy at tau = 0 is 1 by the >= rule.
inline std::vector<std::pair<double, double>> accuracy_vs_iou_curve(
    std::span<const Detection> detections, std::span<const double> thresholds) {
    if (detections.empty())
        throw std::invalid_argument("accuracy_vs_iou_curve: no detections");
    for (size_t i = 0; i < thresholds.size(); ++i) {
        if (thresholds[i] < 0.0 || thresholds[i] > 1.0)
            throw std::invalid_argument("accuracy_vs_iou_curve: thresholds must lie in [0,1]");
        if (i > 0 && thresholds[i] <= thresholds[i - 1])
            throw std::invalid_argument("accuracy_vs_iou_curve: thresholds must be ascending");
    }
    std::vector<std::pair<double, double>> curve;
    curve.reserve(thresholds.size());
    for (double tau : thresholds) {
        int64_t hits = 0;
        for (const Detection& d : detections)
            if (d.iou >= tau) ++hits;
        curve.emplace_back(tau, static_cast<double>(hits) / static_cast<double>(detections.size()));
    }
    return curve;
}

namespace detail {

inline Timing timing_stats(std::vector<double> ms) {
    Timing t;
    if (ms.empty()) return t;
    double sum = 0;
    for (double v : ms) sum += v;
    t.mean_ms = sum / static_cast<double>(ms.size());
    std::sort(ms.begin(), ms.end());
    const auto pick = [&](double q) {
        const double pos = q * static_cast<double>(ms.size() - 1);
        return ms[static_cast<size_t>(std::lround(pos))];
    };
    t.p50_ms = pick(0.50);
    t.p95_ms = pick(0.95);
    return t;
}

}  // namespace detail

/// Runs detect_single per record, scoring IoU in original-image coordinates
/// and aggregating pixel confusion at network resolution. Unreadable images
/// are counted and excluded from the aggregates.
inline EvalReport evaluate(const Model& model, std::span<const DatasetRecord> records,
                           const std::filesystem::path& data_root,
                           std::span<const double> thresholds) {
    using clock = std::chrono::steady_clock;
    const int net_h = model.config.input_height(), net_w = model.config.input_width();

    EvalReport report;
    ConfusionCounts pixel_counts;
    std::vector<double> latencies;
    for (const DatasetRecord& record : records) {
        Tensor image;
        try {
            image = load_image(data_root / record.path);
        } catch (const ImageError&) {
            ++report.load_failures;
            continue;
        }
        const int h = image.shape[1], w = image.shape[2];

        const auto t0 = clock::now();
        DetectResult det = detect_single(model, image);
        const auto t1 = clock::now();

        Detection d;
        d.record = record;
        d.predicted = det.quad;
        d.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        if (det.quad) d.iou = quad_iou(*det.quad, record.quad);
        latencies.push_back(d.latency_ms);

        const Quad scaled = scale_quad(record.quad, static_cast<double>(net_w) / w,
                                       static_cast<double>(net_h) / h);
        const Tensor truth = rasterize_quad(scaled, net_h, net_w);
        pixel_counts += confusion_counts(det.prob_map, truth);
        report.detections.push_back(std::move(d));
    }

    if (!report.detections.empty())
        report.curve = accuracy_vs_iou_curve(report.detections, thresholds);
    report.pixel = metrics_from_counts(pixel_counts);
    report.timing = detail::timing_stats(std::move(latencies));
    return report;
}

/// Wall-clock statistics of forward + post-processing on a fixed random
/// image; one warm-up pass is discarded and disk I/O is excluded.
inline Timing bench_inference(const Model& model, int image_size, int iterations) {
    if (iterations < 10) throw std::invalid_argument("bench_inference: need iterations >= 10");
    if (image_size < 1) throw std::invalid_argument("bench_inference: image_size must be positive");
    using clock = std::chrono::steady_clock;

    Rng rng(123);
    Tensor image({1, image_size, image_size, 3});
    for (float& v : image.data) v = static_cast<float>(rng.uniform());

    (void)detect_single(model, image);  // warm-up
    std::vector<double> ms(static_cast<size_t>(iterations));
    for (int i = 0; i < iterations; ++i) {
        const auto t0 = clock::now();
        (void)detect_single(model, image);
        const auto t1 = clock::now();
        ms[static_cast<size_t>(i)] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    return detail::timing_stats(std::move(ms));
}

}  // namespace idseg
