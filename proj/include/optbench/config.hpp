#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "optbench/ged.hpp"
#include "optbench/judge.hpp"
#include "optbench/llm.hpp"
#include "optbench/pairing.hpp"
#include "optbench/sandbox.hpp"

namespace optbench {

struct PathsConfig {
  std::string corpus;
  std::string tests;
  std::string workdir;
  std::string output;
};

struct LlmConfig {
  std::string backend = "mock";  // mock | http
  std::string endpoint;
  std::string model = "gpt-4o";
  std::string key_env = "OPENAI_API_KEY";
  int rpm = 0;
  int concurrency = 4;
  int max_tokens = 2048;
  int max_retries = 3;
  double retry_base_delay_s = 1.0;
  std::string mock_script;
  std::string templates_dir;
};

struct PairingConfig {
  PairMode user_mode = PairMode::Consecutive;
  PairMode problem_mode = PairMode::AllForward;
  bool require_faster = true;
  bool drop_identical_source = true;
};

struct MetricsConfig {
  OutputPolicy output_policy{};
  int repetitions = 5;
  int k = 0;  // 0: use every candidate
};

struct AnalysisConfig {
  std::size_t budget = kDefaultGedBudget;
  double bucket_width = 1.0;
};

struct VerifyConfig {
  int max_iterations = 1;
  int n_inputs = 3;
};

struct Config {
  PathsConfig paths;
  Toolchain toolchain;
  LlmConfig llm;
  PairingConfig pairing;
  MetricsConfig metrics;
  AnalysisConfig analysis;
  VerifyConfig verify;
  unsigned workers = 0;  // 0: cores - 1
  std::uint64_t seed = 0;
};

// Unknown keys and ill-typed values raise Error{ConfigError}.
Config config_from_json(const nlohmann::json& j);
Config load_config(const std::filesystem::path& path);
nlohmann::json to_json(const Config& c);

// Backend + client per the llm section. Live backends fail fast with
// Error{AuthError} when the key variable is unset.
std::shared_ptr<ChatBackend> make_backend(const LlmConfig& c);
ClientOptions client_options(const LlmConfig& c);

}  // namespace optbench
