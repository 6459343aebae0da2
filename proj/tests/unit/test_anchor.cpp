#include <gtest/gtest.h>

#include "optbench/anchor.hpp"
#include "optbench/error.hpp"
#include "support.hpp"
#include "verify_fixture.hpp"

using namespace optbench;
using testsupport::fixture_text;

namespace {

std::string reply_line(const std::string& tmpl, const std::string& reply) {
  return nlohmann::json({{"match", {{"template", tmpl}}}, {"reply", reply}}).dump() + "\n";
}

struct InlineRig {
  explicit InlineRig(const std::string& script, const std::string& name)
      : llm(std::shared_ptr<ChatBackend>(MockBackend::from_jsonl(script))),
        sandbox(Toolchain{}, testsupport::scratch(name)),
        ctx{llm, sandbox, templates, {}} {}
  LlmClient llm;
  TemplateRegistry templates;
  Sandbox sandbox;
  AnchorContext ctx;
};

}  // namespace

TEST(Anchor, CaseStudyOneEndToEnd) {
  testsupport::VerifyRig rig("case_study1/mock.jsonl", "anchor_cs1");
  VerificationJob job;
  job.job_id = "cs1";
  job.slow_src = fixture_text("case_study1/slow.cpp");
  job.candidate_src = fixture_text("case_study1/candidate.cpp");
  const auto o = run_anchor_verification(job, rig.ctx);
  EXPECT_TRUE(o.passed) << o.error.value_or("");
  EXPECT_EQ(o.iterations_used, 1);
  EXPECT_EQ(o.tests_used, 3u);
  EXPECT_EQ(o.candidate_passed_tests, 0u);
  EXPECT_EQ(o.final_passed_tests, 3u);
  EXPECT_EQ(trim(o.final_src), trim(fixture_text("case_study1/corrected.cpp")));
  EXPECT_EQ(o.stage_costs.at(cost_key::Query).llm_calls, 1);
  EXPECT_EQ(o.stage_costs.at(cost_key::Refinement).llm_calls, 1);
  EXPECT_GT(o.stage_costs.at(cost_key::ExecTestcaseOutput).exec_seconds, 0.0);
  // The refinement prompt shows the first failing anchored case and feedback.
  bool saw = false;
  for (const auto& t : o.transcript)
    if (t.stage == "stage3") {
      saw = true;
      EXPECT_NE(t.prompt.find("15 8 12 10 20"), std::string::npos);
      EXPECT_NE(t.prompt.find("Expected output"), std::string::npos);
    }
  EXPECT_TRUE(saw);
}

TEST(Anchor, Stage2DropsBrokenInputs) {
  Sandbox sb(Toolchain{}, testsupport::scratch("anchor_s2"));
  const auto src = fixture_text("anchor20/p01.cpp");
  const auto set = stage2_anchor_outputs(src, {"3\n1 2 3", "abc", "0", "2\n5"}, sb);
  ASSERT_EQ(set.cases.size(), 1u);
  EXPECT_EQ(set.cases[0].expected, "6\n");
  EXPECT_EQ(set.cases[0].status, TestStatus::Anchored);
  EXPECT_EQ(set.cases[0].input, "3\n1 2 3\n");
  ASSERT_EQ(set.dropped.size(), 3u);
  EXPECT_NE(set.dropped[0].reason.find("RuntimeError"), std::string::npos);
  EXPECT_EQ(set.dropped[1].reason, "empty stdout");
  EXPECT_NE(set.dropped[2].reason.find("RuntimeError"), std::string::npos);
  try {
    stage2_anchor_outputs(src, {"abc"}, sb);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AllInputsDropped);
  }
  try {
    stage2_anchor_outputs("int main( {", {"1"}, sb);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SlowCodeCompileError);
  }
}

TEST(Anchor, Stage1RetriesOnceWhenShort) {
  const std::string one = "**Test Inputs:**\nTest case 1 input:\n1\n5\n";
  const std::string three = "**Test Inputs:**\n```\n1\n1\n```\n```\n1\n2\n```\n```\n1\n3\n```\n";
  InlineRig rig(reply_line("AnchorStage1", one) + reply_line("AnchorStage1", three), "anchor_s1");
  const auto r = stage1_generate_inputs("int main(){}", rig.ctx, 3);
  EXPECT_EQ(r.inputs.size(), 3u);
  EXPECT_FALSE(r.short_of_target);
  EXPECT_EQ(rig.llm.dispatch_times().size(), 2u);

  InlineRig short_rig(reply_line("AnchorStage1", one), "anchor_s1b");
  const auto s = stage1_generate_inputs("int main(){}", short_rig.ctx, 3);
  EXPECT_EQ(s.inputs.size(), 1u);
  EXPECT_TRUE(s.short_of_target);

  InlineRig empty_rig(reply_line("AnchorStage1", "I cannot help."), "anchor_s1c");
  try {
    stage1_generate_inputs("int main(){}", empty_rig.ctx, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroInputs);
  }
}

TEST(Anchor, ZeroIterationsOnlyValidates) {
  testsupport::VerifyRig rig("case_study1/mock.jsonl", "anchor_zero");
  VerificationJob job{"cs1", fixture_text("case_study1/slow.cpp"), fixture_text("case_study1/candidate.cpp"),
                      VerificationMethod::AnchorVerification, 0, 3, {}};
  const auto o = run_anchor_verification(job, rig.ctx);
  EXPECT_FALSE(o.passed);
  EXPECT_EQ(o.iterations_used, 0);
  EXPECT_EQ(o.final_src, job.candidate_src);
}

TEST(Anchor, FailuresBecomeOutcomesNotExceptions) {
  InlineRig rig(reply_line("AnchorStage1", "nothing useful"), "anchor_fail");
  VerificationJob job{"x", "int main(){}", "int main(){}", VerificationMethod::AnchorVerification, 1, 3, {}};
  const auto o = run_verification(job, rig.ctx);
  EXPECT_FALSE(o.passed);
  ASSERT_TRUE(o.error);
  EXPECT_NE(o.error->find("ZeroInputs"), std::string::npos);
  EXPECT_EQ(o.final_src, job.candidate_src);
}

TEST(Anchor, FixtureBatchRepairsExactlyTwo) {
  testsupport::VerifyRig rig("verify/mock.jsonl", "anchor_batch");
  const auto jobs = testsupport::verify_jobs(VerificationMethod::AnchorVerification, 1);
  int repaired = 0;
  for (const auto& job : jobs) {
    const auto o = run_verification(job, rig.ctx);
    ASSERT_TRUE(o.trusted_pass.has_value());
    if (*o.trusted_pass && !testsupport::candidate_trusted(job, rig.sandbox)) ++repaired;
    EXPECT_EQ(o.stage_costs.count(cost_key::Query), 1u);
  }
  EXPECT_EQ(repaired, 2);
}

TEST(Anchor, OutcomeJsonAndCostCsv) {
  VerificationOutcome o;
  o.job_id = "j";
  o.stage_costs[cost_key::Query] = {1, 0.5, 0.0};
  const auto j = to_json(o);
  EXPECT_EQ(j["job_id"], "j");
  EXPECT_TRUE(j["trusted_pass"].is_null());
  const auto csv = stage_costs_csv({o});
  EXPECT_EQ(csv.substr(0, 12), "job_id,metho");
  EXPECT_NE(csv.find("j,AnchorVerification,1,0.5,0"), std::string::npos);
  EXPECT_EQ(parse_verification_method("self-debug"), VerificationMethod::SelfDebugging);
  EXPECT_THROW(parse_verification_method("magic"), Error);
}
