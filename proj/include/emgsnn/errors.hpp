#pragma once

#include <stdexcept>
#include <string>

namespace emgsnn {

// Error taxonomy mapped to process exit codes by the CLI:
//   ConfigError -> 1 (invalid parameter or input value)
//   IoError     -> 2 (file system / parse failure, message carries the path)
//   StateError  -> 3 (missing calibration, version mismatch, bad call order)
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace emgsnn
