#include "optbench/metrics.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

#include "optbench/error.hpp"
#include "optbench/util.hpp"

namespace optbench {

// ---------------------------------------------------------------- judging

OutputPolicy parse_output_policy(const std::string& s) {
  const std::string v = to_lower(trim(s));
  if (v == "exact") return {OutputPolicyKind::Exact, 0.0};
  if (v == "token") return {OutputPolicyKind::Token, 0.0};
  if (v == "numeric") return {OutputPolicyKind::Numeric, 1e-9};
  if (v.rfind("numeric:", 0) == 0) {
    char* end = nullptr;
    const std::string num = v.substr(8);
    const double eps = std::strtod(num.c_str(), &end);
    if (end && *end == '\0' && !num.empty() && eps >= 0 && std::isfinite(eps))
      return {OutputPolicyKind::Numeric, eps};
  }
  throw Error(ErrorKind::InvalidArgument, "unknown output policy '" + s + "'");
}

std::string to_string(const OutputPolicy& p) {
  switch (p.kind) {
    case OutputPolicyKind::Exact: return "exact";
    case OutputPolicyKind::Token: return "token";
    case OutputPolicyKind::Numeric: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "numeric:%g", p.eps);
      return buf;
    }
  }
  return "token";
}

namespace {

std::optional<double> parse_number(const std::string& tok) {
  const char* b = tok.data();
  const char* e = b + tok.size();
  if (b != e && *b == '+') ++b;
  double v = 0;
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool numeric_equal(const std::vector<std::string>& a, const std::vector<std::string>& b,
                   double eps) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    const auto x = parse_number(a[i]);
    const auto y = parse_number(b[i]);
    if (!x || !y) return false;
    if (std::abs(*x - *y) > eps * std::max(1.0, std::abs(*y))) return false;
  }
  return true;
}

}  // namespace

bool judge_output(std::string_view actual, std::string_view expected, const OutputPolicy& policy) {
  switch (policy.kind) {
    case OutputPolicyKind::Exact:
      return rtrim_newlines(actual) == rtrim_newlines(expected);
    case OutputPolicyKind::Token:
      return split_whitespace(actual) == split_whitespace(expected);
    case OutputPolicyKind::Numeric:
      return numeric_equal(split_whitespace(actual), split_whitespace(expected), policy.eps);
  }
  return false;
}

// ---------------------------------------------------------------- metrics

std::string to_string(FailureMode m) {
  switch (m) {
    case FailureMode::CompileFail: return "CompileFail";
    case FailureMode::FormatFail: return "FormatFail";
    case FailureMode::SemanticFail: return "SemanticFail";
  }
  return "SemanticFail";
}

namespace {
void check_times(double old_ms, double new_ms) {
  if (!(old_ms > 0) || !(new_ms > 0) || !std::isfinite(old_ms) || !std::isfinite(new_ms))
    throw Error(ErrorKind::NonPositiveTime, "running times must be positive");
}
}  // namespace

double speedup(double old_ms, double new_ms, bool correct) {
  check_times(old_ms, new_ms);
  if (!correct) return 1.0;
  return std::max(1.0, old_ms / new_ms);
}

bool is_optimized(double old_ms, double new_ms, bool correct) {
  check_times(old_ms, new_ms);
  // new <= old / 1.1 rearranged so integral timings compare exactly.
  return correct && new_ms * 11.0 <= old_ms * 10.0;
}

EvalRecord best_of_k(EvalRecord record) {
  record.chosen.reset();
  for (std::size_t i = 0; i < record.candidates.size(); ++i) {
    const auto& c = record.candidates[i];
    if (!c.correct) continue;
    if (!record.chosen || c.new_ms < record.candidates[*record.chosen].new_ms) record.chosen = i;
  }
  return record;
}

double record_speedup(const EvalRecord& record) {
  if (!record.chosen) return 1.0;
  const auto& c = record.candidates.at(*record.chosen);
  return speedup(c.old_ms, c.new_ms, c.correct);
}

bool record_optimized(const EvalRecord& record) {
  if (!record.chosen) return false;
  const auto& c = record.candidates.at(*record.chosen);
  return is_optimized(c.old_ms, c.new_ms, c.correct);
}

bool record_correct(const EvalRecord& record) {
  return record.chosen && record.candidates.at(*record.chosen).correct;
}

MetricsSummary summarize(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "no records to summarize");
  MetricsSummary s;
  s.n_records = records.size();
  double opt = 0, correct = 0, total = 0;
  for (const auto& raw : records) {
    const EvalRecord r = raw.chosen ? raw : best_of_k(raw);
    total += record_speedup(r);
    opt += record_optimized(r) ? 1 : 0;
    correct += record_correct(r) ? 1 : 0;
  }
  const double n = static_cast<double>(records.size());
  s.pct_opt = opt / n;
  s.pct_correct = correct / n;
  s.speedup_mean = total / n;
  return s;
}

std::optional<FailureMode> classify_failure(const ExecutionResult& result,
                                            const std::string& expected) {
  if (result.compile != CompileStatus::Ok) return FailureMode::CompileFail;
  if (result.run != RunStatus::Ok) return FailureMode::SemanticFail;
  if (judge_output(result.stdout_text, expected, {OutputPolicyKind::Exact, 0.0})) return std::nullopt;
  if (judge_output(result.stdout_text, expected, {OutputPolicyKind::Numeric, 1e-9}))
    return FailureMode::FormatFail;
  return FailureMode::SemanticFail;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw Error(ErrorKind::InvalidArgument, "pearson: length mismatch");
  if (xs.size() < 2) throw Error(ErrorKind::InvalidArgument, "pearson: need at least two points");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw Error(ErrorKind::InvalidArgument, "pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

nlohmann::json to_json(const MetricsSummary& s) {
  return {{"pct_opt", s.pct_opt},
          {"speedup_mean", s.speedup_mean},
          {"pct_correct", s.pct_correct},
          {"n", s.n_records}};
}

nlohmann::json to_json(const EvalRecord& r) {
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : r.candidates) {
    cands.push_back({{"correct", c.correct},
                     {"old_ms", c.old_ms},
                     {"new_ms", c.new_ms},
                     {"failure_mode", c.failure_mode ? nlohmann::json(to_string(*c.failure_mode))
                                                     : nlohmann::json(nullptr)}});
  }
  return {{"pair_id", r.pair_id},
          {"candidates", cands},
          {"chosen", r.chosen ? nlohmann::json(*r.chosen) : nlohmann::json(nullptr)},
          {"speedup", record_speedup(r)},
          {"optimized", record_optimized(r)},
          {"correct", record_correct(r)}};
}

}  // namespace optbench
