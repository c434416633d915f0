#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hazelab/cli.hpp"
#include "hazelab/image_io.hpp"
#include "hazelab/io_util.hpp"
#include "hazelab/tensor.hpp"
#include "oracles.hpp"

using namespace hazelab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("hazelab-cli-" + std::to_string(
                                     std::chrono::steady_clock::now().time_since_epoch().count()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// capture both streams so CLI runs stay silent in the test log
struct Capture {
    std::ostringstream out, err;
    std::streambuf* old_out;
    std::streambuf* old_err;
    Capture() : old_out(std::cout.rdbuf(out.rdbuf())), old_err(std::cerr.rdbuf(err.rdbuf())) {}
    ~Capture() {
        std::cout.rdbuf(old_out);
        std::cerr.rdbuf(old_err);
    }
};

int cli(std::vector<const char*> args, std::string* out = nullptr, std::string* err = nullptr) {
    args.insert(args.begin(), "hazelab");
    Capture cap;
    const int code = run_cli(static_cast<int>(args.size()), args.data());
    if (out) *out = cap.out.str();
    if (err) *err = cap.err.str();
    return code;
}

std::string tiny_config(const TempDir& dir) {
    const std::string path = dir.file("tiny.json");
    std::ofstream(path) << R"({"channels": 4, "depths": [1, 1, 1, 1],)"
                        << R"( "estimator_hidden": 2, "feature_dim": 4, "seed": 3})";
    return path;
}

void write_test_image(const std::string& path, int64_t h, int64_t w) {
    Tensor img({1, 3, h, w});
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t y = 0; y < h; ++y)
            for (int64_t x = 0; x < w; ++x)
                img.at(0, c, y, x) = static_cast<float>(
                    0.2 + 0.1 * static_cast<double>(c) +
                    0.4 * static_cast<double>(y) / static_cast<double>(h) +
                    0.2 * static_cast<double>(x) / static_cast<double>(w));
    write_ppm(path, img);
}

}  // namespace

TEST_CASE("synth then dehaze --eval completes the pipeline") {
    TempDir dir;
    write_test_image(dir.file("clean.ppm"), 16, 16);
    const std::string cfg = tiny_config(dir);

    CHECK(cli({"synth", dir.file("clean.ppm").c_str(), (dir.path / "scene").c_str(), "--t", "0.6",
               "--A", "0.9,0.85,0.8"}) == 0);
    CHECK(fs::exists(dir.file("scene_clean.ppm")));
    CHECK(fs::exists(dir.file("scene_t.pgm")));
    CHECK(fs::exists(dir.file("scene_hazy.ppm")));
    CHECK(fs::exists(dir.file("scene_scene.json")));

    const json scene = json::parse(read_text(dir.file("scene_scene.json")));
    CHECK(scene.at("t") == 0.6);
    CHECK(scene.at("atmospheric_light").size() == 3);

    std::string out;
    CHECK(cli({"dehaze", dir.file("scene_hazy.ppm").c_str(), dir.file("restored.ppm").c_str(),
               "--config", cfg.c_str(), "--eval", dir.file("scene_clean.ppm").c_str()},
              &out) == 0);
    CHECK(fs::exists(dir.file("restored.ppm")));
    const json eval = json::parse(out);
    CHECK(eval.contains("psnr"));
    CHECK(eval.contains("ssim"));
    CHECK(eval.at("ssim").get<double>() <= 1.0);
}

TEST_CASE("dehaze --debug-dumps writes the estimator intermediates") {
    TempDir dir;
    write_test_image(dir.file("in.ppm"), 12, 12);
    const std::string cfg = tiny_config(dir);
    CHECK(cli({"dehaze", dir.file("in.ppm").c_str(), dir.file("out.ppm").c_str(), "--config",
               cfg.c_str(), "--debug-dumps", dir.file("dumps").c_str()}) == 0);
    CHECK(fs::exists(dir.path / "dumps" / "dark_channel.pgm"));
    CHECK(fs::exists(dir.path / "dumps" / "transmission.pgm"));
    const json params = json::parse(read_text((dir.path / "dumps" / "params.json").string()));
    CHECK(params.at("atmospheric_light").size() == 3);
    CHECK(params.contains("c_a_mean"));
}

TEST_CASE("attribute produces a 16-bit map with a sidecar") {
    TempDir dir;
    write_test_image(dir.file("in.ppm"), 8, 8);
    const std::string cfg = tiny_config(dir);
    CHECK(cli({"attribute", dir.file("in.ppm").c_str(), dir.file("map.pgm").c_str(), "--steps",
               "2", "--lambda", "0.5", "--config", cfg.c_str()}) == 0);

    const Tensor map = read_pgm(dir.file("map.pgm"));
    CHECK(map.shape() == std::vector<int64_t>{1, 1, 8, 8});

    const json side = json::parse(read_text(dir.file("map.pgm.json")));
    CHECK(side.at("steps") == 2);
    CHECK(side.at("lambda") == 0.5);
    CHECK(side.contains("min"));
    CHECK(side.contains("max"));
    CHECK(side.at("min").get<double>() <= side.at("max").get<double>());
}

TEST_CASE("bench-cache prints the CSV schema") {
    TempDir dir;
    std::ofstream(dir.file("sched.json"))
        << R"({"steps": [{"h": 64, "w": 64, "c_a": 1.0}, {"h": 64, "w": 64, "c_a": 0.5}]})";
    std::string out;
    CHECK(cli({"bench-cache", "--schedule", dir.file("sched.json").c_str()}, &out) == 0);
    std::istringstream iss(out);
    std::string header;
    std::getline(iss, header);
    CHECK(header == "step,H,W,c_a_mean,gamma,cache_len_on,cache_len_off,bytes_on,bytes_off,ms");
    int lines = 0;
    for (std::string line; std::getline(iss, line);)
        if (!line.empty()) ++lines;
    CHECK(lines == 2);
}

TEST_CASE("usage errors exit with code 1") {
    std::string err;
    CHECK(cli({"dehaze", "only-one-arg"}, nullptr, &err) == 1);
    CHECK(cli({"dehaze", "a.ppm", "b.ppm", "--bogus-flag"}, nullptr, &err) == 1);
    CHECK(cli({"no-such-command"}, nullptr, &err) == 1);
    CHECK(cli({}, nullptr, &err) == 1);

    TempDir dir;
    write_test_image(dir.file("c.ppm"), 4, 4);
    // --t and --t-map exclude each other
    std::ofstream(dir.file("t.pgm"));
    CHECK(cli({"synth", dir.file("c.ppm").c_str(), (dir.path / "s").c_str(), "--t", "0.5",
               "--t-map", dir.file("t.pgm").c_str()}) == 1);
    // malformed --A value
    CHECK(cli({"synth", dir.file("c.ppm").c_str(), (dir.path / "s").c_str(), "--A", "1,2"}) == 1);
}

TEST_CASE("io errors exit with code 2") {
    TempDir dir;
    CHECK(cli({"dehaze", dir.file("absent.ppm").c_str(), dir.file("out.ppm").c_str()}) == 2);
    std::ofstream(dir.file("truncated.ppm")) << "P6\n4 4\n255\n";
    CHECK(cli({"dehaze", dir.file("truncated.ppm").c_str(), dir.file("out.ppm").c_str()}) == 2);
    CHECK(cli({"bench-cache", "--schedule", dir.file("absent.json").c_str()}) == 2);
}

TEST_CASE("validation errors exit with code 3") {
    TempDir dir;
    write_test_image(dir.file("in.ppm"), 4, 4);
    std::ofstream(dir.file("bad.json")) << R"({"channels": 0})";
    CHECK(cli({"dehaze", dir.file("in.ppm").c_str(), dir.file("out.ppm").c_str(), "--config",
               dir.file("bad.json").c_str()}) == 3);

    // synth validates ranges after parsing
    CHECK(cli({"synth", dir.file("in.ppm").c_str(), (dir.path / "s").c_str(), "--t", "1.5"}) == 3);
    CHECK(cli({"synth", dir.file("in.ppm").c_str(), (dir.path / "s").c_str(), "--A",
               "2,0.5,0.5"}) == 3);

    // attribution input too large
    write_test_image(dir.file("big.ppm"), 40, 40);
    const std::string cfg = tiny_config(dir);
    CHECK(cli({"attribute", dir.file("big.ppm").c_str(), dir.file("map.pgm").c_str(), "--steps",
               "2", "--config", cfg.c_str()}) == 3);
}

TEST_CASE("help is not an error") {
    std::string out;
    CHECK(cli({"--help"}, &out) == 0);
    CHECK(out.find("dehaze") != std::string::npos);
    CHECK(out.find("selftest") != std::string::npos);
}
