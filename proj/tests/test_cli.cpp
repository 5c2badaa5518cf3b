// Drives the idseg binary as a subprocess. The binary path arrives through
// the IDSEG_CLI_BIN environment variable (set by ctest); without it these
// tests are skipped.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "idseg/idseg.hpp"

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code = -1;
    std::string output;
};

CmdResult run_cli(const std::string& args) {
    const char* bin = std::getenv("IDSEG_CLI_BIN");
    REQUIRE(bin != nullptr);
    static int counter = 0;
    const fs::path log = fs::temp_directory_path() / ("idseg_cli_test_" + std::to_string(counter++) + ".log");
    const std::string cmd = std::string("\"") + bin + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    CmdResult r;
    r.exit_code = rc == -1 ? -1 : WEXITSTATUS(rc);
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "idseg_cli_suite";
    fs::create_directories(dir);
    return dir;
}

/// Writes a reference-config model whose probability map is ~0 everywhere.
fs::path write_silent_model(const fs::path& path) {
    idseg::Model m = idseg::init_model(idseg::reference_config(), 1);
    for (auto& p : m.params) {
        for (float& v : p.weights.data) v = 0.0f;
        for (float& v : p.bias.data) v = 0.0f;
    }
    m.params.back().bias.data[0] = -20.0f;
    idseg::save_model(m, path);
    return path;
}

}  // namespace

TEST_CASE("cli availability") {
    if (!std::getenv("IDSEG_CLI_BIN")) {
        SKIP("IDSEG_CLI_BIN not set");
    }
    REQUIRE(run_cli("--help").exit_code == 0);
}

TEST_CASE("cli synth") {
    if (!std::getenv("IDSEG_CLI_BIN")) SKIP("IDSEG_CLI_BIN not set");
    const fs::path dir = scratch();

    SECTION("zero counts produce an empty manifest with exit 0") {
        const auto r = run_cli("synth --out \"" + (dir / "empty").string() + "\" --train 0 --test 0");
        REQUIRE(r.exit_code == 0);
        REQUIRE(idseg::parse_manifest_file(dir / "empty" / "manifest.tsv").empty());
    }

    SECTION("row count and prints the manifest path") {
        const auto r = run_cli("synth --out \"" + (dir / "small").string() +
                               "\" --train 5 --test 3 --seed 11");
        REQUIRE(r.exit_code == 0);
        REQUIRE(r.output.find("manifest.tsv") != std::string::npos);
        REQUIRE(idseg::parse_manifest_file(dir / "small" / "manifest.tsv").size() == 8);
    }

    SECTION("invalid clutter is a usage error") {
        REQUIRE(run_cli("synth --out \"" + (dir / "bad").string() + "\" --clutter 1.5").exit_code != 0);
    }
}

TEST_CASE("cli detect") {
    if (!std::getenv("IDSEG_CLI_BIN")) SKIP("IDSEG_CLI_BIN not set");
    const fs::path dir = scratch();
    const fs::path model = write_silent_model(dir / "silent.bin");
    REQUIRE(run_cli("synth --out \"" + (dir / "det_data").string() +
                    "\" --train 0 --test 2 --seed 3").exit_code == 0);
    const fs::path image = dir / "det_data" / "images" / "synth_00000.png";

    SECTION("a silent model reports found=false with exit 0 and strict JSON") {
        const auto r = run_cli("detect --model \"" + model.string() + "\" --image \"" +
                               image.string() + "\" --json \"" + (dir / "det.json").string() + "\"");
        REQUIRE(r.exit_code == 0);
        const auto j = nlohmann::json::parse(r.output);
        REQUIRE(j["found"] == false);
        REQUIRE(j["quad"].is_null());
        REQUIRE(j["latency_ms"].is_number());
        std::ifstream f(dir / "det.json");
        const auto file_json = nlohmann::json::parse(f);
        REQUIRE(file_json["found"] == false);
    }

    SECTION("overlay output decodes as a PNG of the input size") {
        const auto r = run_cli("detect --model \"" + model.string() + "\" --image \"" +
                               image.string() + "\" --overlay \"" + (dir / "ov.png").string() + "\"");
        REQUIRE(r.exit_code == 0);
        const auto img = idseg::read_image(dir / "ov.png");
        REQUIRE(img.h == 128);
        REQUIRE(img.w == 128);
    }

    SECTION("a corrupt model file fails with a nonzero exit") {
        std::ofstream f(dir / "garbage.bin", std::ios::binary);
        f << "not a model";
        f.close();
        const auto r = run_cli("detect --model \"" + (dir / "garbage.bin").string() +
                               "\" --image \"" + image.string() + "\"");
        REQUIRE(r.exit_code != 0);
        REQUIRE(r.output.find("error") != std::string::npos);
    }
}

TEST_CASE("cli eval and bench") {
    if (!std::getenv("IDSEG_CLI_BIN")) SKIP("IDSEG_CLI_BIN not set");
    const fs::path dir = scratch();
    const fs::path model = write_silent_model(dir / "silent2.bin");
    REQUIRE(run_cli("synth --out \"" + (dir / "eval_data").string() +
                    "\" --train 2 --test 4 --seed 5").exit_code == 0);
    const std::string common = " --model \"" + model.string() + "\" --manifest \"" +
                               (dir / "eval_data" / "manifest.tsv").string() +
                               "\" --data-root \"" + (dir / "eval_data").string() + "\"";

    SECTION("curve CSV has 20 rows at step 0.05, non-increasing, 1.0 at tau 0") {
        const fs::path curve = dir / "curve.csv";
        const auto r = run_cli("eval" + common + " --curve \"" + curve.string() + "\"");
        REQUIRE(r.exit_code == 0);
        std::ifstream in(curve);
        std::string line;
        std::getline(in, line);
        REQUIRE(line == "threshold,accuracy");
        std::vector<double> accs;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const size_t comma = line.find(',');
            accs.push_back(std::strtod(line.c_str() + comma + 1, nullptr));
        }
        REQUIRE(accs.size() == 20);
        REQUIRE(accs.front() == 1.0);
        for (size_t i = 1; i < accs.size(); ++i) REQUIRE(accs[i] <= accs[i - 1]);
        REQUIRE(r.output.find("pixel: accuracy=") != std::string::npos);
        REQUIRE(r.output.find("latency_ms: mean=") != std::string::npos);
    }

    SECTION("a train-only manifest with --split test is an error") {
        REQUIRE(run_cli("synth --out \"" + (dir / "train_only").string() +
                        "\" --train 2 --test 0 --seed 6").exit_code == 0);
        const auto r = run_cli("eval --model \"" + model.string() + "\" --manifest \"" +
                               (dir / "train_only" / "manifest.tsv").string() +
                               "\" --data-root \"" + (dir / "train_only").string() +
                               "\" --curve \"" + (dir / "c2.csv").string() + "\"");
        REQUIRE(r.exit_code != 0);
    }

    SECTION("bench prints three statistics and rejects iters < 10") {
        const auto r = run_cli("bench --model \"" + model.string() + "\" --iters 10");
        REQUIRE(r.exit_code == 0);
        REQUIRE(r.output.find("mean_ms=") != std::string::npos);
        REQUIRE(r.output.find("p50_ms=") != std::string::npos);
        REQUIRE(r.output.find("p95_ms=") != std::string::npos);
        REQUIRE(run_cli("bench --model \"" + model.string() + "\" --iters 5").exit_code != 0);
    }
}

TEST_CASE("cli train") {
    if (!std::getenv("IDSEG_CLI_BIN")) SKIP("IDSEG_CLI_BIN not set");
    const fs::path dir = scratch();
    REQUIRE(run_cli("synth --out \"" + (dir / "train_data").string() +
                    "\" --train 8 --test 4 --seed 7").exit_code == 0);
    const std::string common = " --manifest \"" + (dir / "train_data" / "manifest.tsv").string() +
                               "\" --data-root \"" + (dir / "train_data").string() + "\"";

    SECTION("one epoch writes a model and a one-row CSV") {
        const auto r = run_cli("train" + common + " --epochs 1 --batch 4 --seed 9 --out \"" +
                               (dir / "m.bin").string() + "\" --log \"" + (dir / "m.csv").string() + "\"");
        REQUIRE(r.exit_code == 0);
        std::ifstream in(dir / "m.csv");
        std::string line;
        std::getline(in, line);
        REQUIRE(line ==
                "epoch,loss,accuracy,precision,recall,val_loss,val_accuracy,val_precision,val_recall");
        int rows = 0;
        while (std::getline(in, line))
            if (!line.empty()) ++rows;
        REQUIRE(rows == 1);
        REQUIRE_NOTHROW(idseg::load_model(dir / "m.bin"));
    }

    SECTION("a manifest without validation rows is an error") {
        REQUIRE(run_cli("synth --out \"" + (dir / "no_val").string() +
                        "\" --train 4 --test 0 --seed 8").exit_code == 0);
        const auto r = run_cli("train --manifest \"" + (dir / "no_val" / "manifest.tsv").string() +
                               "\" --data-root \"" + (dir / "no_val").string() +
                               "\" --epochs 1 --batch 4 --out \"" + (dir / "x.bin").string() +
                               "\" --log \"" + (dir / "x.csv").string() + "\"");
        REQUIRE(r.exit_code != 0);
        REQUIRE(r.output.find("error") != std::string::npos);
    }

    SECTION("missing manifest file is an error") {
        const auto r = run_cli("train --manifest \"" + (dir / "nope.tsv").string() +
                               "\" --data-root \"" + dir.string() + "\" --epochs 1 --out \"" +
                               (dir / "y.bin").string() + "\" --log \"" + (dir / "y.csv").string() + "\"");
        REQUIRE(r.exit_code != 0);
    }
}
