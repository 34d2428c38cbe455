#pragma once

#include <stdexcept>
#include <string>

namespace pcgen {

// Bad configuration values or malformed config files. CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Missing/corrupt datasets, manifests, checkpoints, or IO failures. CLI exit code 3.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric contract violations: shape mismatches, non-finite losses,
// degenerate geometry, solver non-convergence. CLI exit code 4.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pcgen
