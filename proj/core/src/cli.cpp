#include "hazelab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hazelab/attribution.hpp"
#include "hazelab/bench_cache.hpp"
#include "hazelab/config.hpp"
#include "hazelab/errors.hpp"
#include "hazelab/haze_physics.hpp"
#include "hazelab/image_io.hpp"
#include "hazelab/io_util.hpp"
#include "hazelab/metrics.hpp"
#include "hazelab/model.hpp"
#include "hazelab/ops.hpp"
#include "hazelab/selftest.hpp"

namespace hazelab {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kIo = 2;
constexpr int kValidation = 3;

ModelConfig resolve_config(const std::string& config_path) {
    if (config_path.empty()) {
        ModelConfig cfg;
        cfg.validate();
        return cfg;
    }
    return load_config(config_path);
}

WeightStore resolve_weights(const ModelConfig& cfg, const std::string& weights_path) {
    if (weights_path.empty()) return init_weights(cfg);
    return WeightStore::load(weights_path);
}

json finite_or_inf(double v) {
    // JSON numbers cannot carry infinities; identical images report "inf".
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

struct DehazeArgs {
    std::string in, out, weights, config, eval_ref, debug_dir;
};

int cmd_dehaze(const DehazeArgs& a) {
    const ModelConfig cfg = resolve_config(a.config);
    DehazeModel model(cfg, resolve_weights(cfg, a.weights));
    const Tensor image = read_ppm(a.in);
    const DehazeResult res = model.dehaze(image);
    const Tensor presented = clamp01(res.j_hat);
    write_ppm(a.out, presented);

    if (!a.debug_dir.empty()) {
        std::error_code ec;
        fs::create_directories(a.debug_dir, ec);
        if (ec) throw IoError("cannot create " + a.debug_dir + ": " + ec.message());
        const fs::path d(a.debug_dir);
        write_pgm((d / "dark_channel.pgm").string(), res.atm.dark_channel);
        write_pgm((d / "transmission.pgm").string(), res.atm.transmission);
        json p;
        p["atmospheric_light"] = res.atm.atmospheric_light;
        p["c_a"] = res.atm.c_a;
        p["c_a_mean"] = res.atm.c_a_mean();
        p["r"] = res.atm.r.values();
        p["b"] = res.atm.b.values();
        atomic_write_text((d / "params.json").string(), p.dump(2) + "\n");
    }

    if (!a.eval_ref.empty()) {
        const Tensor ref = read_ppm(a.eval_ref);
        if (!ref.same_extents(presented))
            throw ValidationError("eval reference extents " + shape_string(ref.shape()) +
                                  " do not match output " + shape_string(presented.shape()));
        json report;
        report["psnr"] = finite_or_inf(psnr(presented, ref));
        report["ssim"] = ssim(presented, ref);
        std::cout << report.dump(2) << "\n";
    }
    return kOk;
}

struct AttributeArgs {
    std::string in, out, weights, config;
    int64_t steps = 32;
    double lambda = 1.0;
};

int cmd_attribute(const AttributeArgs& a) {
    const ModelConfig cfg = resolve_config(a.config);
    DehazeModel model(cfg, resolve_weights(cfg, a.weights));
    const Tensor image = read_ppm(a.in);

    PathConfig p;
    p.steps = a.steps;
    p.lambda = a.lambda;
    p.t_mid = cfg.t_mid;
    p.fd_epsilon = cfg.fd_epsilon;
    p.t_min = cfg.t_min;
    const AttributionMap m = paam(model, image, p);

    // signed map rescaled into [0, 1] for the 16-bit image; the sidecar keeps
    // min/max so original values stay recoverable
    double lo = m.map[0], hi = m.map[0];
    for (int64_t i = 0; i < m.map.numel(); ++i) {
        lo = std::min(lo, static_cast<double>(m.map[i]));
        hi = std::max(hi, static_cast<double>(m.map[i]));
    }
    Tensor scaled(m.map.shape());
    const double span = hi - lo;
    for (int64_t i = 0; i < m.map.numel(); ++i)
        scaled[i] = span > 0 ? static_cast<float>((static_cast<double>(m.map[i]) - lo) / span) : 0.f;
    write_pgm16(a.out, scaled);

    json side;
    side["steps"] = m.steps;
    side["lambda"] = m.lambda;
    side["t_mid"] = p.t_mid;
    side["fd_epsilon"] = p.fd_epsilon;
    side["min"] = lo;
    side["max"] = hi;
    atomic_write_text(a.out + ".json", side.dump(2) + "\n");
    return kOk;
}

struct SynthArgs {
    std::string clean, prefix, t_map;
    double t = 0.7;
    std::string a_csv = "0.8,0.8,0.8";
};

bool parse_rgb(const std::string& csv, std::array<float, 3>& out) {
    std::istringstream iss(csv);
    std::string part;
    int n = 0;
    while (std::getline(iss, part, ',')) {
        if (n >= 3) return false;
        try {
            size_t used = 0;
            const double v = std::stod(part, &used);
            if (used != part.size() || !std::isfinite(v)) return false;
            out[static_cast<size_t>(n++)] = static_cast<float>(v);
        } catch (const std::exception&) {
            return false;
        }
    }
    return n == 3;
}

int cmd_synth(const SynthArgs& a) {
    std::array<float, 3> light{};
    if (!parse_rgb(a.a_csv, light)) {
        std::cerr << "--A expects three comma-separated numbers, got '" << a.a_csv << "'\n";
        return kUsage;
    }
    for (float v : light)
        if (v < 0.f || v > 1.f)
            throw ValidationError("atmospheric light components must be in [0, 1]");

    const Tensor clean = read_ppm(a.clean);
    Tensor t;
    if (!a.t_map.empty()) {
        t = read_pgm(a.t_map);
        if (t.extent(2) != clean.extent(2) || t.extent(3) != clean.extent(3))
            throw ValidationError("transmission map extents " + shape_string(t.shape()) +
                                  " do not match the clean image " + shape_string(clean.shape()));
    } else {
        if (!(a.t > 0.0 && a.t <= 1.0)) throw ValidationError("--t must be in (0, 1]");
        t = Tensor::full({1, 1, clean.extent(2), clean.extent(3)}, static_cast<float>(a.t));
    }

    const HazeScene scene = make_scene(clean, std::move(t), light);
    write_ppm(a.prefix + "_clean.ppm", scene.clean);
    write_pgm(a.prefix + "_t.pgm", scene.transmission);
    write_ppm(a.prefix + "_hazy.ppm", synthesize_haze(scene));

    json side;
    side["atmospheric_light"] = scene.atmospheric_light;
    side["t_min"] = scene.t_min;
    if (a.t_map.empty())
        side["t"] = a.t;
    else
        side["t_map"] = a.t_map;
    atomic_write_text(a.prefix + "_scene.json", side.dump(2) + "\n");
    return kOk;
}

int cmd_bench_cache(const std::string& schedule_path) {
    ModelConfig cfg;
    const std::vector<BenchStep> schedule =
        schedule_path.empty() ? default_bench_schedule() : load_bench_schedule(schedule_path);
    std::cout << bench_csv(run_bench(cfg, schedule));
    return kOk;
}

int cmd_selftest() {
    const std::vector<CheckResult> results = run_selftest();
    for (const CheckResult& r : results) std::cout << format_check_line(r) << "\n";
    return all_passed(results) ? kOk : kValidation;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"haze removal and analysis toolkit"};
    app.require_subcommand(1);

    DehazeArgs da;
    CLI::App* dehaze = app.add_subcommand("dehaze", "restore a hazy image");
    dehaze->add_option("in", da.in, "hazy input (PPM)")->required();
    dehaze->add_option("out", da.out, "restored output (PPM)")->required();
    dehaze->add_option("--weights", da.weights, "weight manifest path (default: seeded init)");
    dehaze->add_option("--config", da.config, "config JSON path");
    dehaze->add_option("--eval", da.eval_ref, "clean reference (PPM); prints psnr/ssim JSON");
    dehaze->add_option("--debug-dumps", da.debug_dir, "directory for intermediate dumps");

    AttributeArgs aa;
    CLI::App* attribute = app.add_subcommand("attribute", "per-pixel attribution map");
    attribute->add_option("in", aa.in, "hazy input (PPM), at most 32x32")->required();
    attribute->add_option("out", aa.out, "attribution map output (16-bit PGM)")->required();
    attribute->add_option("--steps", aa.steps, "path integration steps");
    attribute->add_option("--lambda", aa.lambda, "feature-gradient weight");
    attribute->add_option("--weights", aa.weights, "weight manifest path (default: seeded init)");
    attribute->add_option("--config", aa.config, "config JSON path");

    SynthArgs sa;
    CLI::App* synth = app.add_subcommand("synth", "synthesize a hazy scene from a clean image");
    synth->add_option("clean", sa.clean, "clean input (PPM)")->required();
    synth->add_option("out-prefix", sa.prefix, "output path prefix")->required();
    CLI::Option* t_opt = synth->add_option("--t", sa.t, "constant transmission in (0, 1]");
    synth->add_option("--t-map", sa.t_map, "transmission map (PGM)")->excludes(t_opt);
    synth->add_option("--A", sa.a_csv, "atmospheric light as r,g,b");

    std::string schedule_path;
    CLI::App* bench = app.add_subcommand("bench-cache", "cache retention benchmark, CSV on stdout");
    bench->add_option("--schedule", schedule_path, "schedule JSON path");

    CLI::App* selftest = app.add_subcommand("selftest", "run the embedded invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // help on stdout, exit 0
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << "run with --help for usage\n";
        return kUsage;
    }

    try {
        if (dehaze->parsed()) return cmd_dehaze(da);
        if (attribute->parsed()) return cmd_attribute(aa);
        if (synth->parsed()) return cmd_synth(sa);
        if (bench->parsed()) return cmd_bench_cache(schedule_path);
        if (selftest->parsed()) return cmd_selftest();
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return kIo;
    } catch (const ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kValidation;
    }
    return kUsage;
}

}  // namespace hazelab
