#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hazelab/config.hpp"

namespace hazelab {

struct BenchStep {
    int64_t h = 64;
    int64_t w = 64;
    double c_a = 1.0;
};

struct BenchRow {
    int64_t step = 0;  // 1-based
    int64_t h = 0, w = 0;
    double c_a_mean = 0.0;
    double gamma = 1.0;
    int64_t cache_len_on = 0;
    int64_t cache_len_off = 0;
    int64_t bytes_on = 0;   // len * dim * 4 bytes * 2 (keys + values)
    int64_t bytes_off = 0;
    double ms = 0.0;        // wall time of the eviction-on attention + update
};

// 20 steps of 64x64 inputs under full haze; with eta = 0.5 the retained
// length settles at 127 while the uncapped arm reaches 1280.
std::vector<BenchStep> default_bench_schedule();

// JSON: {"steps": [{"h": 64, "w": 64, "c_a": 1.0}, ...]}
std::vector<BenchStep> load_bench_schedule(const std::string& path);

// Streams seeded windowed K/V chunks through two caches: one with retention
// driven by the schedule's c_a, one with retention disabled and the length
// cap lifted. Attention runs against the eviction-on cache each step.
std::vector<BenchRow> run_bench(const ModelConfig& cfg, const std::vector<BenchStep>& schedule);

std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace hazelab
