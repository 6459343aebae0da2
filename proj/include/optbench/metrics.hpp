#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "optbench/judge.hpp"
#include "optbench/sandbox.hpp"

namespace optbench {

enum class FailureMode { CompileFail, FormatFail, SemanticFail };
std::string to_string(FailureMode m);

struct CandidateOutcome {
  bool correct = false;
  double old_ms = 0.0;
  double new_ms = 0.0;
  std::optional<FailureMode> failure_mode;
};

struct EvalRecord {
  std::string pair_id;
  std::vector<CandidateOutcome> candidates;
  std::optional<std::size_t> chosen;
};

struct MetricsSummary {
  double pct_opt = 0.0;
  double speedup_mean = 1.0;
  double pct_correct = 0.0;
  std::size_t n_records = 0;
};

// o/n for correct candidates, floored at 1.0; 1.0 for failures.
// Throws Error{NonPositiveTime}.
double speedup(double old_ms, double new_ms, bool correct);

// Correct and at least 10% faster: new <= old / 1.10, boundary included.
bool is_optimized(double old_ms, double new_ms, bool correct);

// Picks the fastest correct candidate (lowest index on ties).
EvalRecord best_of_k(EvalRecord record);

// Speedup and optimized flag contributed by one record after best_of_k.
double record_speedup(const EvalRecord& record);
bool record_optimized(const EvalRecord& record);
bool record_correct(const EvalRecord& record);

// Throws Error{EmptyInput} on an empty list. Records without `chosen` are
// passed through best_of_k first.
MetricsSummary summarize(const std::vector<EvalRecord>& records);

// nullopt when the run passed with byte-exact output.
std::optional<FailureMode> classify_failure(const ExecutionResult& result,
                                            const std::string& expected);

// Throws Error{InvalidArgument} on size mismatch, fewer than two points or
// zero variance.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

nlohmann::json to_json(const MetricsSummary& s);
nlohmann::json to_json(const EvalRecord& r);

}  // namespace optbench
