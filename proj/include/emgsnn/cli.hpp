#pragma once

#include <string>
#include <vector>

namespace emgsnn {

// Entry point behind the `emgsnn` binary; argv[0] excluded. Returns the
// process exit code: 0 success, 1 validation error, 2 I/O error, 3 missing or
// version-mismatched pipeline state.
int run_cli(const std::vector<std::string>& args);

}  // namespace emgsnn
