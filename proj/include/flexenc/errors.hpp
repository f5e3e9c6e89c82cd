#pragma once

#include <stdexcept>
#include <string>

namespace flexenc {

struct FlexError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dimension mismatch in matrix/parameter operations.
struct ShapeError : FlexError {
    using FlexError::FlexError;
};

// Invalid configuration value, names the offending key.
struct ConfigError : FlexError {
    using FlexError::FlexError;
};

// Malformed input file, names the line.
struct ParseError : FlexError {
    using FlexError::FlexError;
};

struct EmptyDataError : FlexError {
    using FlexError::FlexError;
};

// Loss over a batch whose mask sums to zero.
struct EmptyMaskError : FlexError {
    using FlexError::FlexError;
};

// Evaluation protocol selected zero target ratings.
struct EmptyEvaluationError : FlexError {
    using FlexError::FlexError;
};

struct InsufficientDataError : FlexError {
    using FlexError::FlexError;
};

struct IoError : FlexError {
    using FlexError::FlexError;
};

struct DivergenceError : FlexError {
    int epoch;
    explicit DivergenceError(int e)
        : FlexError("training loss diverged (non-finite) at epoch " + std::to_string(e)),
          epoch(e) {}
};

}  // namespace flexenc
