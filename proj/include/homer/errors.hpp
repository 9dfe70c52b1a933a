#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace homer {

/// A required input resource is missing or unreadable.
struct LoadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Readable input whose content does not match the expected format.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Cross-reference inconsistency discovered after loading (dangling ids etc.).
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A prompt template referenced a placeholder with no binding.
struct TemplateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Model output that cannot be parsed into the expected structure.
/// Carries the raw response text for offline inspection.
struct ExtractionError : std::runtime_error {
  ExtractionError(const std::string& what, std::string payload)
      : std::runtime_error(what + "\n--- raw response ---\n" + payload),
        raw_payload(std::move(payload)) {}
  std::string raw_payload;
};

struct ProviderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Wire failure worth retrying (timeouts, 429/5xx).
struct TransientError : ProviderError {
  using ProviderError::ProviderError;
};

/// Authentication failure; never retried.
struct CredentialError : ProviderError {
  using ProviderError::ProviderError;
};

/// Judge response with no recognizable verdict.
struct JudgeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace homer
