#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dgqa {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: corpus files, dataset records, model completions.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::string raw = {})
        : Error(msg), raw_text(std::move(raw)) {}

    /// Offending raw text, retained for inspection.
    std::string raw_text;
};

/// Invariant or configuration violation.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Lookup failure; carries the nearest existing ancestor path when known.
class NotFoundError : public Error {
public:
    NotFoundError(const std::string& msg, std::vector<std::string> ancestor = {})
        : Error(msg), nearest_ancestor(std::move(ancestor)) {}

    std::vector<std::string> nearest_ancestor;
};

/// A required prior-stage artifact is missing.
class DependencyError : public Error {
public:
    DependencyError(const std::string& msg, std::string stage = {})
        : Error(msg), required_stage(std::move(stage)) {}

    std::string required_stage;
};

/// Provider-side failure (refusal, empty completion, contract breach).
class ProviderError : public Error {
public:
    ProviderError(const std::string& msg, std::string key = {})
        : Error(msg), request_key(std::move(key)) {}

    /// Cache key of the offending request, when available.
    std::string request_key;
};

/// Network-level failure; the only retryable provider error.
class TransportError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

/// Endpoint cannot serve a required capability. Raised at configuration
/// time, never per call.
class CapabilityError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

/// Generated text failed a quality gate (e.g. a negative that answers
/// the question instead of refusing).
class QualityError : public Error {
public:
    using Error::Error;
};

/// A judge named no resolvable passage.
class UnassignedError : public Error {
public:
    UnassignedError(const std::string& msg, std::string answer = {})
        : Error(msg), model_answer(std::move(answer)) {}

    std::string model_answer;
};

}  // namespace dgqa
