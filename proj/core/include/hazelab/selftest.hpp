#pragma once

#include <string>
#include <vector>

namespace hazelab {

struct CheckResult {
    int id = 0;
    std::string name;
    bool passed = false;
    double ms = 0.0;
    std::string detail;  // key numbers, or the first failure
};

// The embedded invariant suite: eleven deterministic checks with their own
// inline oracles and per-check time budgets. Used by the `selftest` CLI
// command and by the acceptance test binary.
std::vector<CheckResult> run_selftest();

bool all_passed(const std::vector<CheckResult>& results);

// "PASS  3/11 cache memory bound (12.3 ms) len_on=127 len_off=1280" style
std::string format_check_line(const CheckResult& r);

}  // namespace hazelab
