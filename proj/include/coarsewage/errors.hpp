#ifndef COARSEWAGE_ERRORS_HPP
#define COARSEWAGE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace coarsewage {

/// Invalid configuration or malformed input file.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem / IO failure.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: infeasible fit window, rank deficiency, non-convergence.
struct FitError : std::runtime_error {
    explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace coarsewage

#endif
