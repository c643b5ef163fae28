#pragma once

#include <stdexcept>
#include <string>

namespace rqmap {

// Invalid configuration value (names the offending field in the message).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

// Caller passed an argument that violates an operation precondition.
struct ArgumentError : std::invalid_argument {
    explicit ArgumentError(const std::string& msg) : std::invalid_argument("argument error: " + msg) {}
};

// Tensor shape mismatch; names the layer or operation.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

// NaN/Inf detected, or a solver failed to converge.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error("numeric error: " + msg) {}
};

// Weight transplant between incompatible architectures; lists differing layers.
struct TransplantError : std::runtime_error {
    explicit TransplantError(const std::string& msg) : std::runtime_error("transplant error: " + msg) {}
};

// Persistence failures: bad magic, version mismatch, truncated blob, digest mismatch.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error("io error: " + msg) {}
};

}  // namespace rqmap
