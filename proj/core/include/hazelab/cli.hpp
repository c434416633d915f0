#pragma once

namespace hazelab {

// Full command-line entry point, callable in-process for tests.
// Exit codes: 0 success, 1 usage, 2 file IO, 3 validation.
int run_cli(int argc, const char* const* argv);

}  // namespace hazelab
