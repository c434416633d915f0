#include "hazelab/bench_cache.hpp"

#include <chrono>
#include <limits>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hazelab/attention.hpp"
#include "hazelab/errors.hpp"
#include "hazelab/io_util.hpp"

namespace hazelab {

using nlohmann::json;

std::vector<BenchStep> default_bench_schedule() {
    return std::vector<BenchStep>(20, BenchStep{64, 64, 1.0});
}

std::vector<BenchStep> load_bench_schedule(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw IoError("schedule parse error in " + path + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("steps") || !j["steps"].is_array())
        throw ValidationError("schedule must be an object with a 'steps' array");
    std::vector<BenchStep> steps;
    for (const json& s : j["steps"]) {
        if (!s.is_object() || !s.contains("h") || !s.contains("w") || !s.contains("c_a"))
            throw ValidationError("schedule steps need fields h, w, c_a");
        BenchStep st;
        st.h = s["h"].get<int64_t>();
        st.w = s["w"].get<int64_t>();
        st.c_a = s["c_a"].get<double>();
        if (st.h < 1 || st.w < 1) throw ValidationError("schedule extents must be >= 1");
        if (!(st.c_a >= 0.0 && st.c_a <= 1.0))
            throw ValidationError("schedule c_a must be in [0, 1]");
        steps.push_back(st);
    }
    if (steps.empty()) throw ValidationError("schedule has no steps");
    return steps;
}

std::vector<BenchRow> run_bench(const ModelConfig& cfg, const std::vector<BenchStep>& schedule) {
    cfg.validate();
    if (schedule.empty()) throw ValidationError("bench schedule has no steps");
    const int64_t d = cfg.channels;
    KVCache on(d, cfg.max_cache_len, cfg.eta);
    // The off arm never evicts: retention is skipped and the cap is lifted.
    KVCache off(d, std::numeric_limits<int64_t>::max() / 2, cfg.eta);

    std::mt19937_64 rng(cfg.seed);
    auto u01 = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    std::vector<BenchRow> rows;
    rows.reserve(schedule.size());
    for (size_t i = 0; i < schedule.size(); ++i) {
        const BenchStep& st = schedule[i];
        const int64_t wb = compute_window_size(st.h, st.w, cfg.alpha, cfg.beta, cfg.tau);
        const int64_t wa = std::min({wb, st.h, st.w});
        const int64_t tokens = wa * wa;
        const int64_t grid_h = (st.h + wa - 1) / wa;
        const int64_t grid_w = (st.w + wa - 1) / wa;
        const int64_t nw = grid_h * grid_w;

        Tensor q({nw, tokens, d}), k({nw, tokens, d}), v({nw, tokens, d});
        for (int64_t p = 0; p < q.numel(); ++p) {
            q[p] = static_cast<float>(u01());
            k[p] = static_cast<float>(u01());
            v[p] = static_cast<float>(u01());
        }
        // window-mean pooled chunk, the same shape a block would cache
        Tensor kp({tokens, d}), vp({tokens, d});
        for (int64_t t = 0; t < tokens; ++t)
            for (int64_t f = 0; f < d; ++f) {
                double ak = 0.0, av = 0.0;
                for (int64_t g = 0; g < nw; ++g) {
                    ak += static_cast<double>(k.at(g, t, f));
                    av += static_cast<double>(v.at(g, t, f));
                }
                kp.at(t, f) = static_cast<float>(ak / static_cast<double>(nw));
                vp.at(t, f) = static_cast<float>(av / static_cast<double>(nw));
            }

        const auto t0 = std::chrono::steady_clock::now();
        const Retention r = on.retain(st.c_a);
        (void)cached_window_attention(q, k, v, on, Tensor{});
        on.append(kp, vp);
        const auto t1 = std::chrono::steady_clock::now();

        off.retain(0.0);
        off.append(kp, vp);

        BenchRow row;
        row.step = static_cast<int64_t>(i) + 1;
        row.h = st.h;
        row.w = st.w;
        row.c_a_mean = st.c_a;
        row.gamma = r.gamma;
        row.cache_len_on = on.size();
        row.cache_len_off = off.size();
        row.bytes_on = on.size() * d * 4 * 2;
        row.bytes_off = off.size() * d * 4 * 2;
        row.ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        rows.push_back(row);
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream oss;
    oss << "step,H,W,c_a_mean,gamma,cache_len_on,cache_len_off,bytes_on,bytes_off,ms\n";
    for (const BenchRow& r : rows) {
        oss << r.step << ',' << r.h << ',' << r.w << ',' << r.c_a_mean << ',' << r.gamma << ','
            << r.cache_len_on << ',' << r.cache_len_off << ',' << r.bytes_on << ','
            << r.bytes_off << ',' << r.ms << '\n';
    }
    return oss.str();
}

}  // namespace hazelab
