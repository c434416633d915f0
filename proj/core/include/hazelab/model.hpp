#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hazelab/config.hpp"
#include "hazelab/estimator.hpp"
#include "hazelab/pa_stb.hpp"
#include "hazelab/reconstruction.hpp"
#include "hazelab/tensor.hpp"
#include "hazelab/weight_store.hpp"

namespace hazelab {

struct ModelWeights {
    EstimatorWeights estimator;
    BackboneWeights backbone;
    ReconWeights recon;
};

// Walks the full weight schema for a config, in blob order. The same walk
// drives initialization, zero fills, and store binding, so the three can
// never disagree about names or shapes.
void for_each_model_tensor(
    const ModelConfig& cfg,
    const std::function<void(const std::string& name, const std::vector<int64_t>& shape)>& fn);

// Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) fills for weights; norm
// scales start at one, shifts and biases at zero, batch-norm stats at the
// identity. Same seed, same bytes.
WeightStore init_weights(const ModelConfig& cfg);

// All-zero weights except batch-norm variance (one). With these the model
// output equals its input exactly.
WeightStore zero_weights(const ModelConfig& cfg);

// Shape-checked extraction of every model tensor from a store.
ModelWeights bind_weights(const ModelConfig& cfg, const WeightStore& store);

struct DehazeResult {
    Tensor j_hat;    // (1, 3, H, W), unclamped
    AtmosphericParams atm;
    Tensor f_up;     // physics-upsampled features feeding the output conv
    std::vector<BlockTrace> traces;  // one per transformer block
};

// Stateful inference wrapper. Key/value caches persist across dehaze() calls
// so that sequential chunks of one scene share attention history; call
// reset_caches() between unrelated inputs.
class DehazeModel {
public:
    DehazeModel(ModelConfig cfg, const WeightStore& store);

    const ModelConfig& config() const { return cfg_; }
    const ModelWeights& weights() const { return weights_; }

    AtmosphericParams estimate_params(const Tensor& image) const;
    DehazeResult dehaze(const Tensor& image);

    void reset_caches();
    std::vector<KVCache>& caches() { return caches_; }
    const std::vector<KVCache>& caches() const { return caches_; }

private:
    ModelConfig cfg_;
    ModelWeights weights_;
    std::vector<KVCache> caches_;
};

// Splits a large image into tile x tile patches (stride = tile - overlap),
// dehazes each in scan order with caches carried across tiles, and averages
// overlapping predictions back into a full-size output.
Tensor dehaze_tiled(DehazeModel& model, const Tensor& image, int64_t tile, int64_t overlap);

}  // namespace hazelab
