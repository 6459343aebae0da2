#include "optbench/anchor.hpp"

#include <chrono>
#include <sstream>

#include <spdlog/spdlog.h>

#include "optbench/error.hpp"
#include "optbench/util.hpp"

namespace optbench {

std::string to_string(VerificationMethod m) {
  switch (m) {
    case VerificationMethod::AnchorVerification: return "AnchorVerification";
    case VerificationMethod::SelfDebugging: return "SelfDebugging";
    case VerificationMethod::DirectTestGeneration: return "DirectTestGeneration";
    case VerificationMethod::ComparisonGroup: return "ComparisonGroup";
  }
  return "AnchorVerification";
}

VerificationMethod parse_verification_method(const std::string& s) {
  const std::string v = to_lower(s);
  if (v == "anchor" || v == "anchorverification") return VerificationMethod::AnchorVerification;
  if (v == "self-debug" || v == "selfdebugging" || v == "self-debugging") return VerificationMethod::SelfDebugging;
  if (v == "direct-test" || v == "directtestgeneration") return VerificationMethod::DirectTestGeneration;
  if (v == "comparison" || v == "comparisongroup") return VerificationMethod::ComparisonGroup;
  throw Error(ErrorKind::InvalidArgument, "unknown verification method '" + s + "'");
}

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

VerificationOutcome fresh_outcome(const VerificationJob& job) {
  VerificationOutcome o;
  o.job_id = job.job_id;
  o.method = job.method;
  o.final_src = job.candidate_src;
  for (const auto* key : {&cost_key::Query, &cost_key::ExecTestcaseOutput, &cost_key::ExecTestcase,
                          &cost_key::Refinement})
    o.stage_costs[*key];
  return o;
}

std::string call_llm(AnchorContext& ctx, VerificationOutcome* log, const std::string& stage,
                     const std::string& cost, TemplateName name, const Bindings& bindings,
                     double temperature) {
  ChatRequest req = make_request(ctx.templates, name, bindings, temperature);
  const auto t0 = clock_type::now();
  std::string reply;
  try {
    reply = ctx.llm.complete_text(req);
  } catch (const Error& e) {
    if (log) {
      auto& c = log->stage_costs[cost];
      ++c.llm_calls;
      c.llm_seconds += seconds_since(t0);
      log->transcript.push_back({stage, req.messages.front().content, "", std::string("LLM error: ") + e.what()});
    }
    if (e.kind() == ErrorKind::MockMiss || e.kind() == ErrorKind::AuthError) throw;
    throw Error(ErrorKind::LlmFailure, e.what());
  }
  if (log) {
    auto& c = log->stage_costs[cost];
    ++c.llm_calls;
    c.llm_seconds += seconds_since(t0);
    log->transcript.push_back({stage, req.messages.front().content, reply, ""});
  }
  return reply;
}

std::string with_newline(std::string s) {
  if (s.empty() || s.back() != '\n') s += '\n';
  return s;
}

std::string clip(const std::string& s, std::size_t n = 4000) {
  return s.size() <= n ? s : s.substr(0, n) + "\n...[truncated]";
}

struct Validation {
  std::size_t passed = 0;
  std::optional<std::size_t> first_fail;
  std::string feedback;  // diagnostic for the first failure
};

Validation validate(AnchorContext& ctx, const std::string& src, const std::vector<TestCase>& tests,
                    double* exec_seconds) {
  const auto t0 = clock_type::now();
  Validation v;
  const CompileResult handle = ctx.sandbox.compile(src);
  if (handle.status != CompileStatus::Ok) {
    v.first_fail = 0;
    v.feedback = handle.status == CompileStatus::Timeout
                     ? "Compilation timed out."
                     : "Compilation failed:\n" + clip(handle.diagnostics);
  } else {
    for (std::size_t i = 0; i < tests.size(); ++i) {
      const auto r = ctx.sandbox.run(handle, tests[i].input, 1, tests[i].id);
      const bool ok = r.ran_ok() && judge_output(r.stdout_text, tests[i].expected, ctx.policy);
      if (ok) {
        ++v.passed;
        continue;
      }
      if (v.first_fail) continue;
      v.first_fail = i;
      switch (r.run) {
        case RunStatus::Timeout:
          v.feedback = "Time limit exceeded (" + r.run_detail + ") on this test case.";
          break;
        case RunStatus::OutputLimit:
          v.feedback = "Output limit exceeded on this test case.";
          break;
        case RunStatus::RuntimeError:
          v.feedback = "Runtime error (" + r.run_detail + ") on this test case." +
                       (r.stderr_text.empty() ? "" : "\nstderr:\n" + clip(r.stderr_text, 1000));
          break;
        default:
          v.feedback = "Wrong answer.\nExpected output:\n" + clip(rtrim_newlines(tests[i].expected), 1000) +
                       "\nActual output:\n" + clip(rtrim_newlines(r.stdout_text), 1000);
      }
    }
  }
  if (exec_seconds) *exec_seconds += seconds_since(t0);
  return v;
}

std::string format_testcase(const TestCase& t) {
  return "Input:\n" + rtrim_newlines(t.input) + "\nExpected output:\n" + rtrim_newlines(t.expected);
}

// Code section of a reply; nullopt when the reply carries no program.
std::optional<std::string> reply_code(const std::string& reply) {
  try {
    auto p = parse_sections(reply, {section::Code});
    std::string code = p.get(section::Code);
    if (trim(code).empty()) return std::nullopt;
    return code;
  } catch (const Error&) {
    return std::nullopt;
  }
}

void check_trusted(const VerificationJob& job, AnchorContext& ctx, VerificationOutcome& o) {
  if (job.trusted_tests.empty()) return;
  const auto v = validate(ctx, o.final_src, job.trusted_tests, nullptr);
  o.trusted_pass = v.passed == job.trusted_tests.size();
}

template <typename Body>
VerificationOutcome guarded(const VerificationJob& job, AnchorContext& ctx, Body body) {
  const auto t0 = clock_type::now();
  VerificationOutcome o = fresh_outcome(job);
  try {
    if (trim(job.slow_src).empty()) throw Error(ErrorKind::InvalidArgument, "slow program is empty");
    if (job.max_iterations < 0) throw Error(ErrorKind::InvalidArgument, "max_iterations must be >= 0");
    body(o);
  } catch (const Error& e) {
    if (!o.error) o.error = e.what();
    o.passed = false;
    o.final_src = job.candidate_src;
    spdlog::warn("verify {}: {}", job.job_id, e.what());
  }
  check_trusted(job, ctx, o);
  o.wall_seconds = seconds_since(t0);
  return o;
}

}  // namespace

Stage1Result stage1_generate_inputs(const std::string& slow_src, AnchorContext& ctx, int n_inputs,
                                    VerificationOutcome* log) {
  Stage1Result best;
  const Bindings b{{"slow_code", slow_src}};
  for (int attempt = 0; attempt < 2; ++attempt) {
    const double temp = attempt == 0 ? kRefinementTemperature : kSamplingTemperature;
    const std::string reply =
        call_llm(ctx, log, "stage1", cost_key::Query, TemplateName::AnchorStage1, b, temp);
    Stage1Result got;
    try {
      const auto parsed = parse_sections(reply, {section::TestInputs});
      got.inputs = extract_test_inputs(parsed);
      if (parsed.has(section::Explanation)) got.explanation = parsed.get(section::Explanation);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MissingSection) throw;
    }
    if (got.inputs.size() > best.inputs.size() || attempt == 0) best = std::move(got);
    if (static_cast<int>(best.inputs.size()) >= n_inputs) break;
  }
  if (best.inputs.empty()) throw Error(ErrorKind::ZeroInputs, "no test inputs in either stage-1 reply");
  best.short_of_target = static_cast<int>(best.inputs.size()) < n_inputs;
  if (best.short_of_target)
    spdlog::warn("stage1: got {} of {} requested inputs", best.inputs.size(), n_inputs);
  return best;
}

VerifiedTestSet stage2_anchor_outputs(const std::string& slow_src, const std::vector<std::string>& inputs,
                                      Sandbox& sandbox, StageCost* cost) {
  const auto t0 = clock_type::now();
  VerifiedTestSet set;
  const CompileResult handle = sandbox.compile(slow_src);
  if (handle.status != CompileStatus::Ok) {
    if (cost) cost->exec_seconds += seconds_since(t0);
    throw Error(ErrorKind::SlowCodeCompileError, clip(handle.diagnostics, 2000));
  }
  const double timeout = sandbox.toolchain().run_timeout_s * 3.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string input = with_newline(inputs[i]);
    const auto r = sandbox.run(handle, input, 1, "anchor-" + std::to_string(i + 1), timeout);
    if (r.run != RunStatus::Ok) {
      set.dropped.push_back({inputs[i], to_string(r.run) + (r.run_detail.empty() ? "" : ": " + r.run_detail)});
    } else if (trim(r.stdout_text).empty()) {
      set.dropped.push_back({inputs[i], "empty stdout"});
    } else {
      set.cases.push_back({"anchor-" + std::to_string(i + 1), input, r.stdout_text, TestStatus::Anchored});
    }
  }
  if (cost) cost->exec_seconds += seconds_since(t0);
  if (set.cases.empty())
    throw Error(ErrorKind::AllInputsDropped, "all " + std::to_string(inputs.size()) + " inputs were dropped");
  return set;
}

VerificationOutcome stage3_refine(const std::string& candidate_src, const std::vector<TestCase>& tests,
                                  const std::string& explanation, AnchorContext& ctx, int max_iterations,
                                  VerificationOutcome outcome) {
  if (tests.empty()) throw Error(ErrorKind::EmptyTestSet, "stage 3 needs at least one test case");
  if (max_iterations < 0) throw Error(ErrorKind::InvalidArgument, "max_iterations must be >= 0");
  VerificationOutcome& o = outcome;
  o.final_src = candidate_src;
  o.tests_used = tests.size();
  auto& exec = o.stage_costs[cost_key::ExecTestcase].exec_seconds;
  std::string current = candidate_src;
  Validation v = validate(ctx, current, tests, &exec);
  o.candidate_passed_tests = v.passed;
  o.final_passed_tests = v.passed;
  if (!v.first_fail) {
    o.passed = true;
    return o;
  }
  for (int it = 1; it <= max_iterations; ++it) {
    const Bindings b{{"code", current},
                     {"explanation", explanation},
                     {"Testcase", format_testcase(tests[*v.first_fail])},
                     {"Feedback", v.feedback}};
    std::string reply;
    try {
      reply = call_llm(ctx, &o, "stage3", cost_key::Refinement, TemplateName::AnchorStage3Refine, b,
                       kRefinementTemperature);
    } catch (const Error& e) {
      o.error = e.what();
      break;
    }
    o.iterations_used = it;
    o.transcript.back().exec_feedback = v.feedback;
    if (auto code = reply_code(reply)) {
      current = *code;
    } else {
      v.feedback = "Your reply did not contain a program. Reply with the complete corrected program.";
      continue;
    }
    v = validate(ctx, current, tests, &exec);
    if (!v.first_fail) {
      o.passed = true;
      o.final_src = current;
      o.final_passed_tests = v.passed;
      return o;
    }
  }
  return o;
}

VerificationOutcome run_anchor_verification(const VerificationJob& job, AnchorContext& ctx) {
  return guarded(job, ctx, [&](VerificationOutcome& o) {
    const auto s1 = stage1_generate_inputs(job.slow_src, ctx, job.n_inputs, &o);
    VerifiedTestSet set;
    try {
      set = stage2_anchor_outputs(job.slow_src, s1.inputs, ctx.sandbox,
                                  &o.stage_costs[cost_key::ExecTestcaseOutput]);
    } catch (const Error& e) {
      o.transcript.push_back({"stage2", "", "", e.what()});
      throw;
    }
    o.dropped_inputs = set.dropped;
    std::ostringstream note;
    note << set.cases.size() << " anchored, " << set.dropped.size() << " dropped";
    for (const auto& d : set.dropped) note << "\ndropped (" << d.reason << "): " << d.input;
    o.transcript.push_back({"stage2", "", "", note.str()});
    o = stage3_refine(job.candidate_src, set.cases, s1.explanation, ctx, job.max_iterations, std::move(o));
  });
}

VerificationOutcome run_self_debugging(const VerificationJob& job, AnchorContext& ctx) {
  return guarded(job, ctx, [&](VerificationOutcome& o) {
    std::string current = job.candidate_src;
    for (int it = 1; it <= job.max_iterations; ++it) {
      const std::string reply = call_llm(ctx, &o, "self-debug", cost_key::Refinement,
                                         TemplateName::SelfDebugging, {{"program", current}},
                                         kRefinementTemperature);
      o.iterations_used = it;
      if (auto code = reply_code(reply)) current = *code;
    }
    o.final_src = current;
    // No executable oracle drives this method; "passed" is the trusted
    // validation result when trusted tests exist.
    if (!job.trusted_tests.empty()) {
      const auto v = validate(ctx, current, job.trusted_tests, &o.stage_costs[cost_key::ExecTestcase].exec_seconds);
      o.tests_used = job.trusted_tests.size();
      o.final_passed_tests = v.passed;
      o.passed = !v.first_fail;
    }
  });
}

VerificationOutcome run_direct_test_generation(const VerificationJob& job, AnchorContext& ctx) {
  return guarded(job, ctx, [&](VerificationOutcome& o) {
    const std::string reply = call_llm(ctx, &o, "direct-test", cost_key::Query, TemplateName::DirectTestGeneration,
                                       {{"slow_code", job.slow_src}}, kRefinementTemperature);
    std::vector<TestCase> tests;
    std::string explanation;
    try {
      const auto parsed = parse_sections(reply, {section::TestCases});
      if (parsed.has(section::Explanation)) explanation = parsed.get(section::Explanation);
      std::size_t k = 0;
      for (auto& io : extract_test_cases(parsed))
        tests.push_back({"synthetic-" + std::to_string(++k), with_newline(io.input), io.output, TestStatus::Synthetic});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MissingSection) throw;
    }
    if (tests.empty()) throw Error(ErrorKind::EmptyTestSet, "no synthetic test cases in the reply");
    o = stage3_refine(job.candidate_src, tests, explanation, ctx, job.max_iterations, std::move(o));
  });
}

VerificationOutcome run_comparison_group(const VerificationJob& job, AnchorContext& ctx) {
  return guarded(job, ctx, [&](VerificationOutcome& o) {
    const auto s1 = stage1_generate_inputs(job.slow_src, ctx, job.n_inputs, &o);
    std::vector<TestCase> tests;
    for (std::size_t i = 0; i < s1.inputs.size(); ++i) {
      const std::string reply = call_llm(ctx, &o, "predict-output", cost_key::ExecTestcaseOutput,
                                         TemplateName::ComparisonGroupOutputs,
                                         {{"slow_code", job.slow_src}, {"test_input", s1.inputs[i]}},
                                         kRefinementTemperature);
      try {
        const auto parsed = parse_sections(reply, {section::Output});
        tests.push_back({"predicted-" + std::to_string(i + 1), with_newline(s1.inputs[i]),
                         parsed.get(section::Output), TestStatus::Synthetic});
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::MissingSection) throw;
        o.dropped_inputs.push_back({s1.inputs[i], "no predicted output"});
      }
    }
    if (tests.empty()) throw Error(ErrorKind::AllInputsDropped, "no predicted outputs");
    o = stage3_refine(job.candidate_src, tests, s1.explanation, ctx, job.max_iterations, std::move(o));
  });
}

VerificationOutcome run_verification(const VerificationJob& job, AnchorContext& ctx) {
  switch (job.method) {
    case VerificationMethod::AnchorVerification: return run_anchor_verification(job, ctx);
    case VerificationMethod::SelfDebugging: return run_self_debugging(job, ctx);
    case VerificationMethod::DirectTestGeneration: return run_direct_test_generation(job, ctx);
    case VerificationMethod::ComparisonGroup: return run_comparison_group(job, ctx);
  }
  return run_anchor_verification(job, ctx);
}

nlohmann::json to_json(const VerificationOutcome& o) {
  nlohmann::json transcript = nlohmann::json::array();
  for (const auto& t : o.transcript)
    transcript.push_back({{"stage", t.stage}, {"prompt", t.prompt}, {"reply", t.reply}, {"exec_feedback", t.exec_feedback}});
  nlohmann::json costs = nlohmann::json::object();
  for (const auto& [k, c] : o.stage_costs)
    costs[k] = {{"llm_calls", c.llm_calls}, {"llm_seconds", c.llm_seconds}, {"exec_seconds", c.exec_seconds}};
  nlohmann::json dropped = nlohmann::json::array();
  for (const auto& d : o.dropped_inputs) dropped.push_back({{"input", d.input}, {"reason", d.reason}});
  return {{"job_id", o.job_id},
          {"method", to_string(o.method)},
          {"passed", o.passed},
          {"iterations_used", o.iterations_used},
          {"final_src", o.final_src},
          {"error", o.error ? nlohmann::json(*o.error) : nlohmann::json(nullptr)},
          {"tests_used", o.tests_used},
          {"candidate_passed_tests", o.candidate_passed_tests},
          {"final_passed_tests", o.final_passed_tests},
          {"trusted_pass", o.trusted_pass ? nlohmann::json(*o.trusted_pass) : nlohmann::json(nullptr)},
          {"dropped_inputs", dropped},
          {"stage_costs", costs},
          {"wall_seconds", o.wall_seconds},
          {"transcript", transcript}};
}

std::string stage_costs_csv(const std::vector<VerificationOutcome>& outcomes) {
  static const std::vector<std::string> keys = {cost_key::Query, cost_key::ExecTestcaseOutput,
                                                cost_key::ExecTestcase, cost_key::Refinement};
  std::ostringstream os;
  os << "job_id,method";
  for (const auto& k : keys) os << ',' << k << "_llm_calls," << k << "_llm_s," << k << "_exec_s";
  os << ",wall_s\n";
  for (const auto& o : outcomes) {
    os << o.job_id << ',' << to_string(o.method);
    for (const auto& k : keys) {
      auto it = o.stage_costs.find(k);
      const StageCost c = it == o.stage_costs.end() ? StageCost{} : it->second;
      os << ',' << c.llm_calls << ',' << c.llm_seconds << ',' << c.exec_seconds;
    }
    os << ',' << o.wall_seconds << '\n';
  }
  return os.str();
}

}  // namespace optbench
