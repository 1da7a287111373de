#pragma once

#include <stdexcept>
#include <string>

namespace bdris {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value, malformed config file, or out-of-range run parameter.
struct ConfigError : Error {
    using Error::Error;
};

/// Tensor/matrix dimension mismatch. Message names both offending shapes.
struct ShapeError : Error {
    using Error::Error;
};

/// Matrix inversion rejected: singular or condition estimate above threshold.
struct SingularityError : Error {
    using Error::Error;
};

/// Input outside an operation's mathematical domain (non-PD matrix, resonance with R=0, ...).
struct DomainError : Error {
    using Error::Error;
};

/// Violated API precondition (non-scalar loss, top-k budget out of range, ...).
struct ContractError : Error {
    using Error::Error;
};

/// File I/O or container format failure.
struct IoError : Error {
    using Error::Error;
};

}  // namespace bdris
