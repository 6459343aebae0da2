#include "optbench/error.hpp"

namespace optbench {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnreadableArchive: return "UnreadableArchive";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::UnknownProblem: return "UnknownProblem";
    case ErrorKind::QuotaForUnknownProblem: return "QuotaForUnknownProblem";
    case ErrorKind::InvalidQuota: return "InvalidQuota";
    case ErrorKind::InvalidPercent: return "InvalidPercent";
    case ErrorKind::InvalidFraction: return "InvalidFraction";
    case ErrorKind::InsufficientPool: return "InsufficientPool";
    case ErrorKind::MissingGED: return "MissingGED";
    case ErrorKind::UnbalancedBraces: return "UnbalancedBraces";
    case ErrorKind::EmptySource: return "EmptySource";
    case ErrorKind::InvalidCostModel: return "InvalidCostModel";
    case ErrorKind::InvalidToolchain: return "InvalidToolchain";
    case ErrorKind::SandboxFailure: return "SandboxFailure";
    case ErrorKind::NonPositiveTime: return "NonPositiveTime";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::AuthError: return "AuthError";
    case ErrorKind::RateLimited: return "RateLimited";
    case ErrorKind::Unavailable: return "Unavailable";
    case ErrorKind::MalformedResponse: return "MalformedResponse";
    case ErrorKind::MockMiss: return "MockMiss";
    case ErrorKind::UnboundPlaceholder: return "UnboundPlaceholder";
    case ErrorKind::UnknownTemplate: return "UnknownTemplate";
    case ErrorKind::MissingSection: return "MissingSection";
    case ErrorKind::LlmFailure: return "LlmFailure";
    case ErrorKind::ZeroInputs: return "ZeroInputs";
    case ErrorKind::SlowCodeCompileError: return "SlowCodeCompileError";
    case ErrorKind::AllInputsDropped: return "AllInputsDropped";
    case ErrorKind::EmptyTestSet: return "EmptyTestSet";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace optbench
