#pragma once

#include <stdexcept>
#include <string>

namespace fedad {

// Bad or inconsistent experiment configuration. CLI exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Problems with input data: files, pools, partitions. CLI exit code 3.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class IdxErrorKind { BadMagic, Truncated, CountMismatch, EmptyPayload };

// IDX file rejected; `kind` tells which format rule was violated.
struct IdxError : DataError {
    IdxErrorKind kind;
    IdxError(IdxErrorKind k, const std::string& msg) : DataError(msg), kind(k) {}
};

// Numeric failure at runtime (dimension mismatch, non-finite values). CLI exit code 4.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace fedad
