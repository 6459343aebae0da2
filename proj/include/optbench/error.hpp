#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace optbench {

// Every domain failure the library reports through exceptions carries one of
// these kinds so callers (and the CLI exit-code mapping) can branch on it.
enum class ErrorKind {
  // corpus
  UnreadableArchive,
  SchemaViolation,
  UnknownProblem,
  // pairing
  QuotaForUnknownProblem,
  InvalidQuota,
  InvalidPercent,
  InvalidFraction,
  InsufficientPool,
  MissingGED,
  // cfganalysis
  UnbalancedBraces,
  EmptySource,
  InvalidCostModel,
  // sandbox
  InvalidToolchain,
  SandboxFailure,
  // metrics
  NonPositiveTime,
  EmptyInput,
  InvalidArgument,
  // llmclient
  AuthError,
  RateLimited,
  Unavailable,
  MalformedResponse,
  MockMiss,
  UnboundPlaceholder,
  UnknownTemplate,
  MissingSection,
  // anchor
  LlmFailure,
  ZeroInputs,
  SlowCodeCompileError,
  AllInputsDropped,
  EmptyTestSet,
  // cli
  ConfigError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

}  // namespace optbench
