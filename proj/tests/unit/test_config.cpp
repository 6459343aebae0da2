#include <gtest/gtest.h>

#include "optbench/config.hpp"
#include "optbench/error.hpp"
#include "support.hpp"

using namespace optbench;

TEST(Config, DefaultsRoundTrip) {
  const Config c;
  const auto back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.metrics.repetitions, 5);
  EXPECT_EQ(back.verify.max_iterations, 1);
  EXPECT_EQ(back.pairing.problem_mode, PairMode::AllForward);
}

TEST(Config, SectionsApplied) {
  const auto c = config_from_json(nlohmann::json::parse(R"({
    "paths": {"corpus": "c.jsonl", "output": "out"},
    "toolchain": {"preset": "gcc-c++17-O3", "run_timeout_s": 4},
    "llm": {"backend": "mock", "mock_script": "m.jsonl", "rpm": 10},
    "pairing": {"user_mode": "all_forward"},
    "metrics": {"output_policy": "numeric:1e-6", "repetitions": 3, "k": 8},
    "analysis": {"budget": 5, "bucket_width": 2},
    "verify": {"max_iterations": 5},
    "parallelism": {"workers": 2},
    "seed": 9
  })"));
  EXPECT_EQ(c.paths.corpus, "c.jsonl");
  EXPECT_EQ(c.toolchain.run_timeout_s, 4.0);
  EXPECT_EQ(c.llm.rpm, 10);
  EXPECT_EQ(c.pairing.user_mode, PairMode::AllForward);
  EXPECT_EQ(c.metrics.output_policy.kind, OutputPolicyKind::Numeric);
  EXPECT_EQ(c.metrics.k, 8);
  EXPECT_EQ(c.analysis.budget, 5u);
  EXPECT_EQ(c.verify.max_iterations, 5);
  EXPECT_EQ(c.workers, 2u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(client_options(c.llm).rpm, 10);
}

TEST(Config, UnknownKeysRejected) {
  auto kind = [](const char* text) {
    try {
      config_from_json(nlohmann::json::parse(text));
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::EmptyInput;
  };
  EXPECT_EQ(kind(R"({"sed": 1})"), ErrorKind::ConfigError);
  EXPECT_EQ(kind(R"({"llm": {"modle": "x"}})"), ErrorKind::ConfigError);
  EXPECT_EQ(kind(R"({"toolchain": {"flags": "-O2"}})"), ErrorKind::ConfigError);
  EXPECT_EQ(kind(R"({"metrics": {"repetitions": "five"}})"), ErrorKind::ConfigError);
}

TEST(Config, LoadFromFile) {
  const auto dir = testsupport::scratch("config_load");
  write_file((dir / "c.json").string(), R"({"seed": 3})");
  EXPECT_EQ(load_config(dir / "c.json").seed, 3u);
  write_file((dir / "bad.json").string(), "{");
  EXPECT_THROW(load_config(dir / "bad.json"), Error);
  EXPECT_THROW(load_config(dir / "missing.json"), Error);
}

TEST(Config, BackendConstruction) {
  LlmConfig mock;
  EXPECT_THROW(make_backend(mock), Error);  // no script
  mock.mock_script = testsupport::fixture("case_study1/mock.jsonl").string();
  EXPECT_EQ(make_backend(mock)->name(), "mock");
  LlmConfig http;
  http.backend = "http";
  http.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  http.key_env = "OPTBENCH_TEST_UNSET_KEY";
  ::unsetenv("OPTBENCH_TEST_UNSET_KEY");
  try {
    make_backend(http);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AuthError);
  }
}
