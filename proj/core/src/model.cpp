#include "hazelab/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hazelab/errors.hpp"

namespace hazelab {

void for_each_model_tensor(
    const ModelConfig& cfg,
    const std::function<void(const std::string&, const std::vector<int64_t>&)>& fn) {
    const int64_t C = cfg.channels;
    const int64_t h = cfg.estimator_hidden;
    const int64_t d = cfg.feature_dim;
    const int64_t m = 2 * (d + 3);
    const int64_t heads = 2 * C + 1;  // r (C) ++ b (C) ++ c_a

    fn("estimator.dark.conv1.weight", {h, 3, 5, 5});
    fn("estimator.dark.conv1.bias", {h});
    fn("estimator.dark.conv2.weight", {1, h, 3, 3});
    fn("estimator.dark.conv2.bias", {1});
    fn("estimator.fuse.conv1.weight", {h, 4, 5, 5});
    fn("estimator.fuse.conv1.bias", {h});
    fn("estimator.fuse.conv2.weight", {d, h, 3, 3});
    fn("estimator.fuse.conv2.bias", {d});
    fn("estimator.mlp.fc1.weight", {m, d + 3});
    fn("estimator.mlp.fc1.bias", {m});
    fn("estimator.mlp.fc2.weight", {m, m});
    fn("estimator.mlp.fc2.bias", {m});
    fn("estimator.mlp.head.weight", {heads, m});
    fn("estimator.mlp.head.bias", {heads});

    fn("backbone.stem.weight", {C, 3, 3, 3});
    fn("backbone.stem.bias", {C});
    const int64_t stages = static_cast<int64_t>(cfg.depths.size());
    for (int64_t i = 0; i < stages; ++i) {
        const int64_t ci = C << i;
        for (int64_t j = 0; j < cfg.depths[static_cast<size_t>(i)]; ++j) {
            const std::string p =
                "backbone.stage" + std::to_string(i) + ".block" + std::to_string(j) + ".";
            fn(p + "ln1.gamma", {ci});
            fn(p + "ln1.beta", {ci});
            fn(p + "attn.q.weight", {ci, ci});
            fn(p + "attn.q.bias", {ci});
            fn(p + "attn.k.weight", {ci, ci});
            fn(p + "attn.k.bias", {ci});
            fn(p + "attn.v.weight", {ci, ci});
            fn(p + "attn.v.bias", {ci});
            fn(p + "attn.out.weight", {ci, ci});
            fn(p + "attn.out.bias", {ci});
            fn(p + "attn.relpos", {15, 15});
            fn(p + "gamma1", {ci});
            fn(p + "beta1", {ci});
            fn(p + "ln2.gamma", {ci});
            fn(p + "ln2.beta", {ci});
            fn(p + "mlp.fc1.weight", {4 * ci, ci});
            fn(p + "mlp.fc1.bias", {4 * ci});
            fn(p + "mlp.fc2.weight", {ci, 4 * ci});
            fn(p + "mlp.fc2.bias", {ci});
            fn(p + "gamma2", {ci});
            fn(p + "beta2", {ci});
        }
        if (i + 1 < stages) {
            const std::string p = "backbone.stage" + std::to_string(i) + ".down.";
            fn(p + "weight", {2 * ci, ci, 3, 3});
            fn(p + "bias", {2 * ci});
        }
    }

    const int64_t cin = backbone_out_channels(cfg.backbone_config());
    const int64_t cr = cfg.resolved_recon_channels();
    fn("recon.pw.weight", {cr, cin, 1, 1});
    fn("recon.pw.bias", {cr});
    fn("recon.bn.gamma", {cr});
    fn("recon.bn.beta", {cr});
    fn("recon.bn.mean", {cr});
    fn("recon.bn.var", {cr});
    fn("recon.dw.weight", {cr, 1, 3, 3});
    fn("recon.dw.bias", {cr});
    fn("recon.out.weight", {3, cr, 3, 3});
    fn("recon.out.bias", {3});
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Norm scales and batch-norm variance start at one; every other non-matrix
// parameter starts at zero.
bool is_ones_param(const std::string& name) {
    return ends_with(name, ".gamma") || ends_with(name, ".gamma1") ||
           ends_with(name, ".gamma2") || ends_with(name, ".bn.var");
}

bool is_zeros_param(const std::string& name) {
    return ends_with(name, ".bias") || ends_with(name, ".beta") || ends_with(name, ".beta1") ||
           ends_with(name, ".beta2") || ends_with(name, ".bn.mean") ||
           ends_with(name, ".relpos");
}

}  // namespace

WeightStore init_weights(const ModelConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    // Uniform in [0, 1) from the top 53 bits, mapped to +-1/sqrt(fan_in).
    auto u01 = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    WeightStore store;
    for_each_model_tensor(cfg, [&](const std::string& name, const std::vector<int64_t>& shape) {
        Tensor t(shape);
        if (is_ones_param(name)) {
            t = Tensor::full(shape, 1.0f);
        } else if (!is_zeros_param(name)) {
            const int64_t numel = shape_numel(shape);
            const int64_t fan_in = std::max<int64_t>(1, numel / shape[0]);
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (int64_t i = 0; i < numel; ++i)
                t.values()[static_cast<size_t>(i)] =
                    static_cast<float>((2.0 * u01() - 1.0) * bound);
        }
        store.put(name, std::move(t));
    });
    return store;
}

WeightStore zero_weights(const ModelConfig& cfg) {
    cfg.validate();
    WeightStore store;
    for_each_model_tensor(cfg, [&](const std::string& name, const std::vector<int64_t>& shape) {
        store.put(name, ends_with(name, ".bn.var") ? Tensor::full(shape, 1.0f) : Tensor(shape));
    });
    return store;
}

ModelWeights bind_weights(const ModelConfig& cfg, const WeightStore& store) {
    cfg.validate();
    ModelWeights w;
    // Walking the schema with shape-checked gets makes missing or mis-shaped
    // tensors fail with the offending name before any compute runs.
    for_each_model_tensor(cfg, [&](const std::string& name, const std::vector<int64_t>& shape) {
        (void)store.get(name, shape);
    });
    auto g = [&](const std::string& name) { return store.get(name); };

    EstimatorWeights& e = w.estimator;
    e.dark_conv1_w = g("estimator.dark.conv1.weight");
    e.dark_conv1_b = g("estimator.dark.conv1.bias");
    e.dark_conv2_w = g("estimator.dark.conv2.weight");
    e.dark_conv2_b = g("estimator.dark.conv2.bias");
    e.fuse_conv1_w = g("estimator.fuse.conv1.weight");
    e.fuse_conv1_b = g("estimator.fuse.conv1.bias");
    e.fuse_conv2_w = g("estimator.fuse.conv2.weight");
    e.fuse_conv2_b = g("estimator.fuse.conv2.bias");
    e.mlp_fc1_w = g("estimator.mlp.fc1.weight");
    e.mlp_fc1_b = g("estimator.mlp.fc1.bias");
    e.mlp_fc2_w = g("estimator.mlp.fc2.weight");
    e.mlp_fc2_b = g("estimator.mlp.fc2.bias");
    e.mlp_head_w = g("estimator.mlp.head.weight");
    e.mlp_head_b = g("estimator.mlp.head.bias");

    BackboneWeights& bb = w.backbone;
    bb.stem_w = g("backbone.stem.weight");
    bb.stem_b = g("backbone.stem.bias");
    const int64_t stages = static_cast<int64_t>(cfg.depths.size());
    bb.stages.resize(static_cast<size_t>(stages));
    for (int64_t i = 0; i < stages; ++i) {
        for (int64_t j = 0; j < cfg.depths[static_cast<size_t>(i)]; ++j) {
            const std::string p =
                "backbone.stage" + std::to_string(i) + ".block" + std::to_string(j) + ".";
            BlockParams bp;
            bp.ln1_gamma = g(p + "ln1.gamma");
            bp.ln1_beta = g(p + "ln1.beta");
            bp.wq = g(p + "attn.q.weight");
            bp.bq = g(p + "attn.q.bias");
            bp.wk = g(p + "attn.k.weight");
            bp.bk = g(p + "attn.k.bias");
            bp.wv = g(p + "attn.v.weight");
            bp.bv = g(p + "attn.v.bias");
            bp.wo = g(p + "attn.out.weight");
            bp.bo = g(p + "attn.out.bias");
            bp.relpos = RelPosBias{7, g(p + "attn.relpos")};
            bp.gamma1 = g(p + "gamma1");
            bp.beta1 = g(p + "beta1");
            bp.ln2_gamma = g(p + "ln2.gamma");
            bp.ln2_beta = g(p + "ln2.beta");
            bp.mlp_w1 = g(p + "mlp.fc1.weight");
            bp.mlp_b1 = g(p + "mlp.fc1.bias");
            bp.mlp_w2 = g(p + "mlp.fc2.weight");
            bp.mlp_b2 = g(p + "mlp.fc2.bias");
            bp.gamma2 = g(p + "gamma2");
            bp.beta2 = g(p + "beta2");
            bb.stages[static_cast<size_t>(i)].push_back(std::move(bp));
        }
        if (i + 1 < stages) {
            const std::string p = "backbone.stage" + std::to_string(i) + ".down.";
            bb.down_w.push_back(g(p + "weight"));
            bb.down_b.push_back(g(p + "bias"));
        }
    }

    ReconWeights& r = w.recon;
    r.pw_w = g("recon.pw.weight");
    r.pw_b = g("recon.pw.bias");
    r.bn_gamma = g("recon.bn.gamma");
    r.bn_beta = g("recon.bn.beta");
    r.bn_mean = g("recon.bn.mean");
    r.bn_var = g("recon.bn.var");
    r.dw_w = g("recon.dw.weight");
    r.dw_b = g("recon.dw.bias");
    r.out_w = g("recon.out.weight");
    r.out_b = g("recon.out.bias");
    return w;
}

namespace {

std::vector<KVCache> make_caches(const ModelConfig& cfg) {
    std::vector<KVCache> caches;
    const int64_t stages = static_cast<int64_t>(cfg.depths.size());
    for (int64_t i = 0; i < stages; ++i) {
        const int64_t ci = cfg.channels << i;
        for (int64_t j = 0; j < cfg.depths[static_cast<size_t>(i)]; ++j)
            caches.emplace_back(ci, cfg.max_cache_len, cfg.eta);
    }
    return caches;
}

}  // namespace

DehazeModel::DehazeModel(ModelConfig cfg, const WeightStore& store) : cfg_(std::move(cfg)) {
    cfg_.validate();
    weights_ = bind_weights(cfg_, store);
    caches_ = make_caches(cfg_);
}

AtmosphericParams DehazeModel::estimate_params(const Tensor& image) const {
    return estimate(image, weights_.estimator, cfg_.q_a);
}

DehazeResult DehazeModel::dehaze(const Tensor& image) {
    if (image.rank() != 4 || image.batch() != 1 || image.channels() != 3)
        throw ValidationError("dehaze expects a (1,3,H,W) image, got " +
                              shape_string(image.shape()));
    DehazeResult out;
    out.atm = estimate_params(image);
    const Tensor feats =
        backbone_forward(image, cfg_.backbone_config(), weights_.backbone, out.atm, caches_,
                         cfg_.window_params(), cfg_.ln_eps, &out.traces);
    const Tensor refined = refine_features(feats, weights_.recon);
    out.f_up = physics_upsample(refined, out.atm.transmission, out.atm.atmospheric_light,
                                image.height(), image.width());
    out.j_hat = compose_output(out.f_up, image, weights_.recon);
    return out;
}

void DehazeModel::reset_caches() { caches_ = make_caches(cfg_); }

Tensor dehaze_tiled(DehazeModel& model, const Tensor& image, int64_t tile, int64_t overlap) {
    if (image.rank() != 4 || image.batch() != 1 || image.channels() != 3)
        throw ValidationError("dehaze_tiled expects a (1,3,H,W) image");
    if (tile < 1) throw ValidationError("tile size must be >= 1");
    if (overlap < 0 || overlap >= tile) throw ValidationError("overlap must be in [0, tile)");
    const int64_t H = image.height();
    const int64_t W = image.width();
    const int64_t stride = tile - overlap;

    // Tile origins cover the image; the last tile per axis is pulled back so
    // it stays inside.
    auto origins = [&](int64_t extent) {
        std::vector<int64_t> out;
        if (extent <= tile) {
            out.push_back(0);
            return out;
        }
        for (int64_t o = 0;; o += stride) {
            if (o + tile >= extent) {
                out.push_back(extent - tile);
                break;
            }
            out.push_back(o);
        }
        return out;
    };
    const std::vector<int64_t> ys = origins(H);
    const std::vector<int64_t> xs = origins(W);

    std::vector<double> sum(static_cast<size_t>(3 * H * W), 0.0);
    std::vector<double> count(static_cast<size_t>(H * W), 0.0);
    for (int64_t y0 : ys)
        for (int64_t x0 : xs) {
            const int64_t th = std::min(tile, H);
            const int64_t tw = std::min(tile, W);
            Tensor patch({1, 3, th, tw});
            for (int64_t c = 0; c < 3; ++c)
                for (int64_t y = 0; y < th; ++y)
                    for (int64_t x = 0; x < tw; ++x)
                        patch.at(0, c, y, x) = image.at(0, c, y0 + y, x0 + x);
            const DehazeResult res = model.dehaze(patch);
            for (int64_t c = 0; c < 3; ++c)
                for (int64_t y = 0; y < th; ++y)
                    for (int64_t x = 0; x < tw; ++x)
                        sum[static_cast<size_t>((c * H + y0 + y) * W + x0 + x)] +=
                            res.j_hat.at(0, c, y, x);
            for (int64_t y = 0; y < th; ++y)
                for (int64_t x = 0; x < tw; ++x)
                    count[static_cast<size_t>((y0 + y) * W + x0 + x)] += 1.0;
        }

    Tensor out({1, 3, H, W});
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x = 0; x < W; ++x)
                out.at(0, c, y, x) = static_cast<float>(
                    sum[static_cast<size_t>((c * H + y) * W + x)] /
                    count[static_cast<size_t>(y * W + x)]);
    return out;
}

}  // namespace hazelab
