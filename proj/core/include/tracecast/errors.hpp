#pragma once

#include <stdexcept>
#include <string>

namespace tracecast {

/// Operand shapes do not conform (programming error in the caller).
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A computation produced NaN/Inf or an optimizer step received one.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input data: bad CSV cell, indivisible run count, missing file.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid run configuration; carries one line per violation.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tracecast
