#pragma once

#include <stdexcept>
#include <string>

namespace kcsm {

/// Bad user input: parameter out of its documented domain.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Requested problem exceeds a configured resource cap (state space, vertex count, window size).
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An iterative solver failed to reach its tolerance; carries the final residual.
struct SolverError : std::runtime_error {
    SolverError(const std::string& what, double residual_)
        : std::runtime_error(what), residual(residual_) {}
    double residual;
};

} // namespace kcsm
