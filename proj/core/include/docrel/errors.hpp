#pragma once

#include <stdexcept>
#include <string>

namespace docrel {

// Malformed input record (bad JSON, missing or mistyped field).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input that violates a domain invariant (index out of range,
// empty mention, duplicate triple, ...).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN or infinity reaching a model input or activation.
class NonFiniteError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Inconsistent or unsupported configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced non-finite losses or activations.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::string document)
      : std::runtime_error(what), document_(std::move(document)) {}
  const std::string& document() const { return document_; }

 private:
  std::string document_;
};

}  // namespace docrel
