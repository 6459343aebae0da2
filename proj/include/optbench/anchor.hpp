#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "optbench/corpus.hpp"
#include "optbench/judge.hpp"
#include "optbench/llm.hpp"
#include "optbench/prompts.hpp"
#include "optbench/sandbox.hpp"

namespace optbench {

enum class VerificationMethod { AnchorVerification, SelfDebugging, DirectTestGeneration, ComparisonGroup };
std::string to_string(VerificationMethod m);
// Accepts the enum names and the short forms anchor/self-debug/direct-test/comparison.
VerificationMethod parse_verification_method(const std::string& s);

struct VerificationJob {
  std::string job_id;
  std::string slow_src;
  std::string candidate_src;
  VerificationMethod method = VerificationMethod::AnchorVerification;
  int max_iterations = 1;  // 0: validate only
  int n_inputs = 3;
  // Held-out reference tests. Never shown to the method; only used to report
  // trusted_pass on the final program.
  std::vector<TestCase> trusted_tests;
};

struct TranscriptEntry {
  std::string stage;
  std::string prompt;
  std::string reply;
  std::string exec_feedback;
};

struct StageCost {
  int llm_calls = 0;
  double llm_seconds = 0.0;
  double exec_seconds = 0.0;
};

// Cost buckets: stage-1 query, stage-2 execution that produces expected
// outputs, stage-3 validation runs, stage-3 refinement calls.
namespace cost_key {
inline const std::string Query = "query";
inline const std::string ExecTestcaseOutput = "exec_testcase_output";
inline const std::string ExecTestcase = "exec_testcase";
inline const std::string Refinement = "refinement";
}  // namespace cost_key

struct DroppedInput {
  std::string input;
  std::string reason;
};

struct VerifiedTestSet {
  std::vector<TestCase> cases;
  std::vector<DroppedInput> dropped;
};

struct VerificationOutcome {
  std::string job_id;
  VerificationMethod method = VerificationMethod::AnchorVerification;
  std::string final_src;
  int iterations_used = 0;
  bool passed = false;
  std::vector<TranscriptEntry> transcript;
  std::map<std::string, StageCost> stage_costs;
  std::optional<std::string> error;  // stage failure that ended the job
  std::size_t tests_used = 0;
  std::size_t candidate_passed_tests = 0;  // on the method's own test set
  std::size_t final_passed_tests = 0;
  std::optional<bool> trusted_pass;
  std::vector<DroppedInput> dropped_inputs;
  double wall_seconds = 0.0;
};

nlohmann::json to_json(const VerificationOutcome& o);
// One row per outcome: job_id,method,<key>_llm_calls,<key>_llm_s,<key>_exec_s...
std::string stage_costs_csv(const std::vector<VerificationOutcome>& outcomes);

struct AnchorContext {
  LlmClient& llm;
  Sandbox& sandbox;
  const TemplateRegistry& templates;
  OutputPolicy policy{};
};

struct Stage1Result {
  std::vector<std::string> inputs;
  std::string explanation;
  bool short_of_target = false;  // fewer than n_inputs after the retry
};

// AnchorStage1 prompt at temperature 0; one retry at 0.7 when fewer than
// n_inputs come back. Throws Error{ZeroInputs} when neither reply has any.
Stage1Result stage1_generate_inputs(const std::string& slow_src, AnchorContext& ctx, int n_inputs,
                                    VerificationOutcome* log = nullptr);

// Executes the slow program on every input (run timeout x3). Inputs that make
// it fail, time out, overflow output or print nothing are dropped.
// Throws Error{SlowCodeCompileError} or Error{AllInputsDropped}.
VerifiedTestSet stage2_anchor_outputs(const std::string& slow_src, const std::vector<std::string>& inputs,
                                      Sandbox& sandbox, StageCost* cost = nullptr);

// Validate / refine loop. final_src is the passing revision, or the original
// candidate when no revision passes every test.
VerificationOutcome stage3_refine(const std::string& candidate_src, const std::vector<TestCase>& tests,
                                  const std::string& explanation, AnchorContext& ctx, int max_iterations,
                                  VerificationOutcome outcome = {});

VerificationOutcome run_anchor_verification(const VerificationJob& job, AnchorContext& ctx);
VerificationOutcome run_self_debugging(const VerificationJob& job, AnchorContext& ctx);
VerificationOutcome run_direct_test_generation(const VerificationJob& job, AnchorContext& ctx);
VerificationOutcome run_comparison_group(const VerificationJob& job, AnchorContext& ctx);
VerificationOutcome run_verification(const VerificationJob& job, AnchorContext& ctx);

}  // namespace optbench
