#include "hazelab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hazelab/errors.hpp"
#include "hazelab/io_util.hpp"

namespace hazelab {

using nlohmann::json;

void ModelConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw ValidationError("config field '" + field + "' " + why);
    };
    if (channels < 1) fail("channels", "must be >= 1");
    if (depths.size() != 4) fail("depths", "must list exactly 4 stage depths");
    for (int64_t d : depths)
        if (d < 0) fail("depths", "entries must be >= 0");
    if (heads != 1) fail("heads", "must be 1 (single-head attention only)");
    if (alpha < 1) fail("alpha", "must be >= 1");
    if (beta < 0) fail("beta", "must be >= 0");
    if (tau < 1) fail("tau", "must be >= 1");
    if (!(eta >= 0.0 && eta <= 1.0)) fail("eta", "must be in [0, 1]");
    if (max_cache_len < 0) fail("max_cache_len", "must be >= 0");
    if (!(q_a >= 0.0 && q_a <= 1.0)) fail("q_a", "must be in [0, 1]");
    if (!(t_min > 0.0 && t_min <= 1.0)) fail("t_min", "must be in (0, 1]");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda", "must be >= 0");
    if (!(t_mid > 0.0 && t_mid < 1.0)) fail("t_mid", "must be in (0, 1)");
    if (!(fd_epsilon >= 1e-5 && fd_epsilon <= 1e-2)) fail("fd_epsilon", "must be in [1e-5, 1e-2]");
    if (!(loss.l1 >= 0.0)) fail("loss_weights.l1", "must be >= 0");
    if (!(loss.mse >= 0.0)) fail("loss_weights.mse", "must be >= 0");
    if (!(loss.ssim >= 0.0)) fail("loss_weights.ssim", "must be >= 0");
    if (estimator_hidden < 1) fail("estimator_hidden", "must be >= 1");
    if (feature_dim < 1) fail("feature_dim", "must be >= 1");
    if (recon_channels < 0) fail("recon_channels", "must be >= 0");
    if (!(ln_eps > 0.0)) fail("ln_eps", "must be positive");
}

namespace {

template <typename T>
void read_field(const json& j, const char* name, T& out) {
    if (!j.contains(name)) return;
    try {
        out = j.at(name).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("config field '") + name + "' has the wrong type");
    }
}

const std::set<std::string> kKnownFields = {
    "channels", "depths", "heads", "alpha", "beta", "tau", "eta", "max_cache_len",
    "q_a", "t_min", "lambda", "t_mid", "fd_epsilon", "loss_weights", "seed",
    "estimator_hidden", "feature_dim", "recon_channels", "ln_eps",
};

}  // namespace

ModelConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("config parse error in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ValidationError("config root must be a JSON object");
    for (const auto& item : j.items())
        if (!kKnownFields.count(item.key()))
            throw ValidationError("unknown config field '" + item.key() + "'");

    ModelConfig cfg;
    read_field(j, "channels", cfg.channels);
    read_field(j, "depths", cfg.depths);
    read_field(j, "heads", cfg.heads);
    read_field(j, "alpha", cfg.alpha);
    read_field(j, "beta", cfg.beta);
    read_field(j, "tau", cfg.tau);
    read_field(j, "eta", cfg.eta);
    read_field(j, "max_cache_len", cfg.max_cache_len);
    read_field(j, "q_a", cfg.q_a);
    read_field(j, "t_min", cfg.t_min);
    read_field(j, "lambda", cfg.lambda);
    read_field(j, "t_mid", cfg.t_mid);
    read_field(j, "fd_epsilon", cfg.fd_epsilon);
    read_field(j, "seed", cfg.seed);
    read_field(j, "estimator_hidden", cfg.estimator_hidden);
    read_field(j, "feature_dim", cfg.feature_dim);
    read_field(j, "recon_channels", cfg.recon_channels);
    read_field(j, "ln_eps", cfg.ln_eps);
    if (j.contains("loss_weights")) {
        const json& lw = j.at("loss_weights");
        if (!lw.is_object()) throw ValidationError("config field 'loss_weights' has the wrong type");
        for (const auto& item : lw.items())
            if (item.key() != "l1" && item.key() != "mse" && item.key() != "ssim")
                throw ValidationError("unknown config field 'loss_weights." + item.key() + "'");
        read_field(lw, "l1", cfg.loss.l1);
        read_field(lw, "mse", cfg.loss.mse);
        read_field(lw, "ssim", cfg.loss.ssim);
    }
    cfg.validate();
    return cfg;
}

std::string config_to_json(const ModelConfig& cfg) {
    json j;
    j["channels"] = cfg.channels;
    j["depths"] = cfg.depths;
    j["heads"] = cfg.heads;
    j["alpha"] = cfg.alpha;
    j["beta"] = cfg.beta;
    j["tau"] = cfg.tau;
    j["eta"] = cfg.eta;
    j["max_cache_len"] = cfg.max_cache_len;
    j["q_a"] = cfg.q_a;
    j["t_min"] = cfg.t_min;
    j["lambda"] = cfg.lambda;
    j["t_mid"] = cfg.t_mid;
    j["fd_epsilon"] = cfg.fd_epsilon;
    j["loss_weights"] = {{"l1", cfg.loss.l1}, {"mse", cfg.loss.mse}, {"ssim", cfg.loss.ssim}};
    j["seed"] = cfg.seed;
    j["estimator_hidden"] = cfg.estimator_hidden;
    j["feature_dim"] = cfg.feature_dim;
    j["recon_channels"] = cfg.recon_channels;
    j["ln_eps"] = cfg.ln_eps;
    return j.dump(2) + "\n";
}

void save_config(const ModelConfig& cfg, const std::string& path) {
    cfg.validate();
    atomic_write_text(path, config_to_json(cfg));
}

}  // namespace hazelab
