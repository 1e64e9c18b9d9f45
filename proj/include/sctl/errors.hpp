#pragma once

#include <stdexcept>
#include <string>

namespace sctl {

// Invalid or inconsistent input data (bad mass, negative weights, ...).
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Grid cannot represent the requested state or transform (aliasing,
// incompatible sampling).
struct ResolutionError : std::runtime_error {
    explicit ResolutionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested computation exceeds the configured memory/size budget.
struct ResourceError : std::runtime_error {
    explicit ResourceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Time step violates a stability bound; carries a usable suggestion.
struct StepSizeError : std::runtime_error {
    StepSizeError(const std::string& msg, double suggested)
        : std::runtime_error(msg), suggested_dt(suggested) {}
    double suggested_dt;
};

// Iterative solver failed to reach its tolerance within the iteration cap.
struct ConvergenceError : std::runtime_error {
    explicit ConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sctl
