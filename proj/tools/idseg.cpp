// Command-line front end: synthetic data generation, training with CSV
// metric logs, single-image detection with overlay output, evaluation
// curves, inference benchmarking and model inspection.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "idseg/idseg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int cmd_synth(const fs::path& out_dir, int train_n, int test_n, int size, uint64_t seed,
              double clutter) {
    idseg::SynthParams params;
    params.count_train = train_n;
    params.count_test = test_n;
    params.image_size = size;
    params.seed = seed;
    params.clutter_level = clutter;
    const fs::path manifest = idseg::generate_synthetic(params, out_dir);
    std::cout << manifest.string() << "\n";
    return 0;
}

struct SplitSets {
    std::vector<idseg::Sample> train;
    std::vector<idseg::Sample> val;
};

SplitSets load_split_samples(const fs::path& manifest, const fs::path& data_root, int net_size) {
    SplitSets sets;
    for (const idseg::DatasetRecord& rec : idseg::parse_manifest_file(manifest)) {
        idseg::Sample s = idseg::make_sample(rec, data_root, net_size);
        if (rec.part == 1)
            sets.train.push_back(std::move(s));
        else
            sets.val.push_back(std::move(s));
    }
    return sets;
}

int cmd_train(const fs::path& manifest, const fs::path& data_root, int epochs, int batch,
              double lr, uint64_t seed, const fs::path& model_out, const fs::path& log_out) {
    SplitSets sets = load_split_samples(manifest, data_root, 128);
    if (sets.train.empty()) {
        std::cerr << "error: manifest has no training rows (part=1)\n";
        return 1;
    }
    if (sets.val.empty()) {
        std::cerr << "error: manifest has no validation rows (part!=1)\n";
        return 1;
    }
    std::cout << "train samples: " << sets.train.size() << ", validation samples: "
              << sets.val.size() << "\n";

    idseg::Model model = idseg::init_model(idseg::reference_config(), seed);
    idseg::TrainOptions opt;
    opt.epochs = epochs;
    opt.batch_size = batch;
    opt.lr = lr;
    opt.seed = seed;
    opt.progress = &std::cout;
    const idseg::TrainLog log = idseg::train(model, sets.train, sets.val, opt);

    idseg::save_model(model, model_out);
    std::ofstream csv(log_out, std::ios::binary | std::ios::trunc);
    if (!csv) {
        std::cerr << "error: cannot write " << log_out.string() << "\n";
        return 1;
    }
    csv << idseg::train_log_csv(log);
    csv.close();
    std::cout << "model written to " << model_out.string() << "\n";
    std::cout << "metrics written to " << log_out.string() << "\n";
    return 0;
}

int cmd_detect(const fs::path& model_path, const fs::path& image_path, const fs::path& json_out,
               const fs::path& overlay_out) {
    const idseg::Model model = idseg::load_model(model_path);
    const idseg::Tensor image = idseg::load_image(image_path);

    const auto t0 = std::chrono::steady_clock::now();
    const idseg::DetectResult det = idseg::detect_single(model, image);
    const auto t1 = std::chrono::steady_clock::now();

    json out;
    out["found"] = det.quad.has_value();
    if (det.quad) {
        json quad = json::array();
        for (const idseg::Point& p : det.quad->v) quad.push_back({p.x, p.y});
        out["quad"] = quad;
    } else {
        out["quad"] = nullptr;
    }
    out["latency_ms"] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    std::cout << out.dump() << "\n";

    if (!json_out.empty()) {
        std::ofstream f(json_out, std::ios::binary | std::ios::trunc);
        if (!f) {
            std::cerr << "error: cannot write " << json_out.string() << "\n";
            return 1;
        }
        f << out.dump(2) << "\n";
    }
    if (!overlay_out.empty()) {
        idseg::ImageU8 img = idseg::read_image(image_path);
        if (img.c == 1) {
            idseg::ImageU8 rgb(img.h, img.w, 3);
            for (int r = 0; r < img.h; ++r)
                for (int c = 0; c < img.w; ++c)
                    for (int ch = 0; ch < 3; ++ch) rgb.at(r, c, ch) = img.at(r, c, 0);
            img = std::move(rgb);
        }
        if (det.quad) idseg::draw_quad(img, *det.quad, 0, 255, 0);
        idseg::write_png(overlay_out, img);
    }
    return 0;
}

int cmd_eval(const fs::path& model_path, const fs::path& manifest, const fs::path& data_root,
             const fs::path& curve_out, double iou_step, const std::string& split) {
    const idseg::Model model = idseg::load_model(model_path);
    std::vector<idseg::DatasetRecord> records;
    for (idseg::DatasetRecord& rec : idseg::parse_manifest_file(manifest)) {
        const bool is_train = rec.part == 1;
        if (split == "all" || (split == "train" && is_train) || (split == "test" && !is_train))
            records.push_back(std::move(rec));
    }
    if (records.empty()) {
        std::cerr << "error: no manifest rows selected for split '" << split << "'\n";
        return 1;
    }

    std::vector<double> thresholds;
    for (int i = 0; i * iou_step < 1.0 - 1e-12; ++i) thresholds.push_back(i * iou_step);
    const idseg::EvalReport report = idseg::evaluate(model, records, data_root, thresholds);
    if (report.detections.empty()) {
        std::cerr << "error: no image could be loaded (" << report.load_failures << " failures)\n";
        return 1;
    }

    std::ofstream csv(curve_out, std::ios::binary | std::ios::trunc);
    if (!csv) {
        std::cerr << "error: cannot write " << curve_out.string() << "\n";
        return 1;
    }
    csv << "threshold,accuracy\n";
    char buf[80];
    for (const auto& [tau, acc] : report.curve) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", tau, acc);
        csv << buf;
    }
    csv.close();

    std::cout << "images evaluated: " << report.detections.size() << " (load failures: "
              << report.load_failures << ")\n";
    std::cout << "accuracy(tau) counts detections with IoU >= tau; misses carry IoU 0, so the "
                 "curve starts at 1.0 for tau=0\n";
    std::snprintf(buf, sizeof buf, "pixel: accuracy=%.6f precision=%.6f recall=%.6f",
                  report.pixel.accuracy, report.pixel.precision, report.pixel.recall);
    std::cout << buf << "\n";
    std::snprintf(buf, sizeof buf, "latency_ms: mean=%.3f p50=%.3f p95=%.3f",
                  report.timing.mean_ms, report.timing.p50_ms, report.timing.p95_ms);
    std::cout << buf << "\n";
    std::cout << "curve written to " << curve_out.string() << "\n";
    return 0;
}

int cmd_bench(const fs::path& model_path, int iters, int size) {
    const idseg::Model model = idseg::load_model(model_path);
    const idseg::Timing t = idseg::bench_inference(model, size, iters);
    char buf[96];
    std::snprintf(buf, sizeof buf, "bench: iters=%d size=%d mean_ms=%.3f p50_ms=%.3f p95_ms=%.3f",
                  iters, size, t.mean_ms, t.p50_ms, t.p95_ms);
    std::cout << buf << "\n";
    return 0;
}

int cmd_inspect(const fs::path& model_path) {
    const idseg::Model model = idseg::load_model(model_path);
    const auto shapes = idseg::layer_output_shapes(model.config);

    std::printf("%-5s %-12s %-14s %s\n", "layer", "kind", "output", "params");
    int64_t total = 0;
    for (size_t i = 0; i < model.config.layers.size(); ++i) {
        const idseg::LayerSpec& l = model.config.layers[i];
        const idseg::LayerShape& s = shapes[i];
        char shape_buf[48];
        if (s.spatial)
            std::snprintf(shape_buf, sizeof shape_buf, "%dx%dx%d", s.h, s.w, s.c);
        else
            std::snprintf(shape_buf, sizeof shape_buf, "%d", s.c);
        const int64_t n = model.params[i].has_params()
                              ? model.params[i].weights.size() + model.params[i].bias.size()
                              : 0;
        total += n;
        std::printf("%-5zu %-12s %-14s %lld\n", i, idseg::kind_name(l.kind), shape_buf,
                    static_cast<long long>(n));
    }
    std::printf("total params: %lld\n", static_cast<long long>(total));
    const auto bytes = fs::file_size(model_path);
    std::printf("file size: %.1f KiB (%llu bytes)\n", static_cast<double>(bytes) / 1024.0,
                static_cast<unsigned long long>(bytes));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"identity document detector: segmentation CNN + quad extraction"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic dataset");
    fs::path synth_out;
    int synth_train = 512, synth_test = 128, synth_size = 128;
    uint64_t synth_seed = 42;
    double synth_clutter = 0.5;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--train", synth_train, "training image count")->check(CLI::NonNegativeNumber);
    synth->add_option("--test", synth_test, "test image count")->check(CLI::NonNegativeNumber);
    synth->add_option("--size", synth_size, "image size in pixels")->check(CLI::Range(32, 4096));
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--clutter", synth_clutter, "clutter level in [0,1]")->check(CLI::Range(0.0, 1.0));

    // train
    auto* train = app.add_subcommand("train", "train the segmentation model");
    fs::path train_manifest, train_root, train_model_out = "model.bin", train_log_out = "metrics.csv";
    int train_epochs = 60, train_batch = 32;
    double train_lr = 1e-3;
    uint64_t train_seed = 42;
    train->add_option("--manifest", train_manifest, "dataset manifest")->required();
    train->add_option("--data-root", train_root, "image root directory")->required();
    train->add_option("--epochs", train_epochs, "training epochs")->check(CLI::PositiveNumber);
    train->add_option("--batch", train_batch, "batch size")->check(CLI::PositiveNumber);
    train->add_option("--lr", train_lr, "learning rate")->check(CLI::PositiveNumber);
    train->add_option("--seed", train_seed, "init + shuffle seed");
    train->add_option("--out", train_model_out, "model file to write");
    train->add_option("--log", train_log_out, "metrics CSV to write");

    // detect
    auto* detect = app.add_subcommand("detect", "detect the document quad in one image");
    fs::path det_model, det_image, det_json, det_overlay;
    detect->add_option("--model", det_model, "model file")->required();
    detect->add_option("--image", det_image, "input image (PNG/PPM/PGM)")->required();
    detect->add_option("--json", det_json, "write the detection JSON here too");
    detect->add_option("--overlay", det_overlay, "write an overlay PNG with the quad drawn");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate detection quality over a manifest");
    fs::path eval_model, eval_manifest, eval_root, eval_curve = "curve.csv";
    double eval_step = 0.05;
    std::string eval_split = "test";
    eval->add_option("--model", eval_model, "model file")->required();
    eval->add_option("--manifest", eval_manifest, "dataset manifest")->required();
    eval->add_option("--data-root", eval_root, "image root directory")->required();
    eval->add_option("--curve", eval_curve, "accuracy-vs-IoU CSV to write");
    eval->add_option("--iou-step", eval_step, "IoU threshold step")->check(CLI::Range(1e-3, 1.0));
    eval->add_option("--split", eval_split, "rows to evaluate: test, train or all")
        ->check(CLI::IsMember({"test", "train", "all"}));

    // bench
    auto* bench = app.add_subcommand("bench", "measure single-image inference latency");
    fs::path bench_model;
    int bench_iters = 100, bench_size = 128;
    bench->add_option("--model", bench_model, "model file")->required();
    bench->add_option("--iters", bench_iters, "iterations (>= 10)")->check(CLI::Range(10, 1000000));
    bench->add_option("--size", bench_size, "input image size")->check(CLI::PositiveNumber);

    // inspect
    auto* inspect = app.add_subcommand("inspect", "print per-layer shapes and parameter counts");
    fs::path inspect_model;
    inspect->add_option("--model", inspect_model, "model file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed())
            return cmd_synth(synth_out, synth_train, synth_test, synth_size, synth_seed, synth_clutter);
        if (train->parsed())
            return cmd_train(train_manifest, train_root, train_epochs, train_batch, train_lr,
                             train_seed, train_model_out, train_log_out);
        if (detect->parsed()) return cmd_detect(det_model, det_image, det_json, det_overlay);
        if (eval->parsed())
            return cmd_eval(eval_model, eval_manifest, eval_root, eval_curve, eval_step, eval_split);
        if (bench->parsed()) return cmd_bench(bench_model, bench_iters, bench_size);
        if (inspect->parsed()) return cmd_inspect(inspect_model);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
