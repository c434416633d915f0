#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hazelab/metrics.hpp"
#include "hazelab/pa_stb.hpp"

namespace hazelab {

// Model- and tool-level knobs. Defaults describe the desk-scale setup; every
// field is range-checked by validate(), and loaders re-validate after parse.
struct ModelConfig {
    int64_t channels = 32;                  // base width C; stages run C, 2C, 4C, 8C
    std::vector<int64_t> depths{2, 2, 2, 2};
    int64_t heads = 1;                      // single-head only
    int64_t alpha = 8;                      // window divisor
    int64_t beta = 4;                       // large-input window bonus
    int64_t tau = 1024;                     // large-input threshold
    double eta = 0.5;                       // cache retention strength
    int64_t max_cache_len = 0;              // 0 resolves to 4x the first chunk
    double q_a = 0.999;                     // atmospheric-light quantile
    double t_min = 0.1;
    double lambda = 1.0;                    // attribution feature-loss weight
    double t_mid = 0.7;                     // attribution baseline transmission
    double fd_epsilon = 1e-3;               // finite-difference step
    LossWeights loss;
    uint64_t seed = 0;
    int64_t estimator_hidden = 8;
    int64_t feature_dim = 16;
    int64_t recon_channels = 0;             // 0 resolves to `channels`
    double ln_eps = 1e-5;

    void validate() const;
    WindowParams window_params() const { return {alpha, beta, tau}; }
    BackboneConfig backbone_config() const { return {channels, depths}; }
    int64_t resolved_recon_channels() const { return recon_channels > 0 ? recon_channels : channels; }
};

ModelConfig load_config(const std::string& path);
std::string config_to_json(const ModelConfig& cfg);
void save_config(const ModelConfig& cfg, const std::string& path);

}  // namespace hazelab
