#pragma once

#include <stdexcept>
#include <string>

namespace aura {

// Shape/dimension contract violations (mismatched operands, bad axes).
class DimError : public std::runtime_error {
public:
    explicit DimError(const std::string& what) : std::runtime_error(what) {}
};

// Bad argument values (non-finite inputs, empty text, non-scalar loss).
class ValueError : public std::runtime_error {
public:
    explicit ValueError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid or unknown configuration keys/values.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input files (CSV rows, sidecar JSON, checkpoints).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Embedding-service transport failures.
class TransportError : public std::runtime_error {
public:
    TransportError(const std::string& what, bool retries_exhausted)
        : std::runtime_error(what), retries_exhausted(retries_exhausted) {}
    bool retries_exhausted;
};

// Training aborts (NaN gradients, empty splits).
class TrainError : public std::runtime_error {
public:
    explicit TrainError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace aura
