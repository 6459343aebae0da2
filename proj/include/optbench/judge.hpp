#pragma once

#include <string>
#include <string_view>

namespace optbench {

enum class OutputPolicyKind { Exact, Token, Numeric };

struct OutputPolicy {
  OutputPolicyKind kind = OutputPolicyKind::Token;
  double eps = 1e-9;  // Numeric only
};

// "exact", "token", "numeric" or "numeric:<eps>".
OutputPolicy parse_output_policy(const std::string& s);
std::string to_string(const OutputPolicy& p);

// exact: byte equality after stripping trailing newlines.
// token: equal whitespace-separated token sequences.
// numeric: token-wise; tokens that both parse as numbers match when
//          |a - b| <= eps * max(1, |b|), others must be equal.
bool judge_output(std::string_view actual, std::string_view expected,
                  const OutputPolicy& policy = {});

}  // namespace optbench
