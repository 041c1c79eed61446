#pragma once

#include <stdexcept>
#include <string>

namespace egpi {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise invalid argument to a pure function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Value outside the range of an envelope.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Inconsistent model or run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input data (empty, unordered, missing columns).
class InputError : public Error {
public:
    using Error::Error;
};

/// Parse failure in a dataset or parameter file. Carries the 1-based line when known.
class ParseError : public InputError {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : InputError(what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Operator stepped before initialization.
class StateError : public Error {
public:
    using Error::Error;
};

/// Parameter vector violates its bounds.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Optimizer could not solve its damped system.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Flag point could not be detected from data.
class DetectionError : public Error {
public:
    using Error::Error;
};

/// Initial guess could not be formed from data.
class InitializationError : public Error {
public:
    using Error::Error;
};

/// NRMSE requested on a measured sequence with zero range.
class NrmseUndefinedError : public Error {
public:
    using Error::Error;
};

}  // namespace egpi
