#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gpscan {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid arguments: dimension mismatches, out-of-range sizes, bad flags.
class InputError : public Error {
public:
    explicit InputError(const std::string& msg) : Error(msg) {}
};

/// Mean-shift MLE requested for an all-zero subset.
class UndefinedMleError : public InputError {
public:
    explicit UndefinedMleError(const std::string& msg) : InputError(msg) {}
};

/// Quadratic form w'Ew fell below the degeneracy tolerance.
class DegenerateError : public Error {
public:
    explicit DegenerateError(const std::string& msg) : Error(msg) {}
};

/// Cholesky failed after exhausting jitter escalation, or similar.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& msg) : Error(msg) {}
};

/// CSV ingestion exceeded the parse-failure cap. Carries row diagnostics.
class IngestError : public Error {
public:
    IngestError(const std::string& msg, std::vector<std::string> diagnostics)
        : Error(msg), diagnostics(std::move(diagnostics)) {}
    std::vector<std::string> diagnostics;
};

/// File could not be read or written.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Significance report requested against a threshold computed under a
/// different scan configuration.
class ConfigMismatchError : public InputError {
public:
    explicit ConfigMismatchError(const std::string& msg) : InputError(msg) {}
};

}  // namespace gpscan
