#pragma once

#include <stdexcept>
#include <string>

namespace eyolo {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tensor/grid shape disagreement. Message carries both shapes.
struct DimensionError : Error {
    using Error::Error;
};

/// Operation called in an invalid state (e.g. backward on a consumed graph).
struct StateError : Error {
    using Error::Error;
};

/// Scalar argument outside its documented domain.
struct RangeError : Error {
    using Error::Error;
};

/// Invalid configuration; message names the violated invariant.
struct ConfigError : Error {
    using Error::Error;
};

/// File could not be read or written; message names the path.
struct IoError : Error {
    using Error::Error;
};

/// Malformed text input; message carries the line number where known.
struct ParseError : Error {
    using Error::Error;
};

/// Structured binary/image input that does not match the expected layout.
struct FormatError : Error {
    using Error::Error;
};

/// NaN/Inf encountered at an op boundary.
struct NumericError : Error {
    using Error::Error;
};

/// Training aborted (divergence, NaN gradients); message names the layer.
struct TrainingError : Error {
    using Error::Error;
};

/// Caller misuse of a high-level entry point (empty dataset, bad mode).
struct UsageError : Error {
    using Error::Error;
};

} // namespace eyolo
