#pragma once

#include <stdexcept>
#include <string>

namespace satnet {

/// Malformed input file; message carries the offending line number.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Structurally valid input that violates a documented constraint.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes.
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid run configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Internal precondition broken (non-scalar loss, non-finite values, ...).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Checkpoint magic/version mismatch.
struct VersionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace satnet
