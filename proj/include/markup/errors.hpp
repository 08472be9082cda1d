#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace markup {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad inputs or configuration (the CLI maps these to exit code 2; runtime
// failures stay on the plain Error branch and exit 1).
struct ConfigError : Error {
    using Error::Error;
};

struct InvalidParams : ConfigError {
    using ConfigError::ConfigError;
};

// A simulated state became NaN or infinite (dt too large for the parameters).
struct NonFinitePath : Error {
    std::uint64_t path_index;
    std::int64_t step;
    NonFinitePath(std::uint64_t path, std::int64_t at_step)
        : Error("non-finite state on path " + std::to_string(path) +
                " at step " + std::to_string(at_step)),
          path_index(path), step(at_step) {}
};

// Picard distances increased for three consecutive iterations.
struct NoContraction : Error {
    using Error::Error;
};

// An operation that needs X > 0 met a non-positive state.
struct NonPositiveState : Error {
    using Error::Error;
};

// x = 0 with a non-zero lambda specification (the control-law terms divide by x).
struct ZeroState : Error {
    using Error::Error;
};

struct SingularDenominator : Error {
    using Error::Error;
};

struct InsufficientData : ConfigError {
    using ConfigError::ConfigError;
};

struct ZeroGap : ConfigError {
    using ConfigError::ConfigError;
};

struct ParseError : ConfigError {
    std::int64_t row;
    ParseError(std::int64_t at_row, const std::string& what)
        : ConfigError("row " + std::to_string(at_row) + ": " + what), row(at_row) {}
};

struct DuplicateDate : ConfigError {
    using ConfigError::ConfigError;
};

struct EmptyFile : ConfigError {
    using ConfigError::ConfigError;
};

struct NoOverlap : ConfigError {
    using ConfigError::ConfigError;
};

struct BaseDateMissing : ConfigError {
    using ConfigError::ConfigError;
};

struct NonPositiveBase : ConfigError {
    using ConfigError::ConfigError;
};

struct ConstantSeries : Error {
    using Error::Error;
};

struct SizeOutOfRange : ConfigError {
    using ConfigError::ConfigError;
};

}  // namespace markup
