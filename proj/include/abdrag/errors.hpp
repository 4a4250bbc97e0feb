#pragma once

#include <stdexcept>
#include <string>

namespace abdrag {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or out-of-range configuration. Messages name the offending key.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed corpus, dataset, index, or trace data.
class DataError : public Error {
public:
    using Error::Error;
};

/// Network-level failure talking to a provider (connect, timeout, I/O).
class TransportError : public Error {
public:
    using Error::Error;
};

/// Provider reachable but the response is unusable (bad status, bad JSON,
/// invalid verdict). Never used for transport failures.
class ProviderError : public Error {
public:
    using Error::Error;
};

/// A generation call produced no non-empty completion even after one retry.
class EmptyCompletionError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

} // namespace abdrag
