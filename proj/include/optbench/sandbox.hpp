#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "optbench/corpus.hpp"
#include "optbench/judge.hpp"

namespace optbench {

// How to build and launch a program. Templates are split on whitespace into
// argv first, then each word has {src}, {bin} and {cxx} substituted, so paths
// containing spaces survive and no shell is involved. {cxx} is OPTBENCH_CXX
// when set, else g++.
struct Toolchain {
  std::string name = "gcc-c++17-O3";
  std::string compile_cmd = "{cxx} -std=c++17 -O3 -o {bin} {src}";
  std::string run_cmd = "{bin}";
  std::string source_ext = ".cpp";
  double compile_timeout_s = 30.0;
  double run_timeout_s = 10.0;
  int mem_limit_mb = 1024;     // address-space cap for runs
  int output_limit_kb = 1024;  // stdout cap per run

  // Throws Error{InvalidToolchain}.
  void validate() const;
};

Toolchain toolchain_preset(const std::string& name);  // "gcc-c++17-O3"
nlohmann::json to_json(const Toolchain& t);
// Starts from the preset named by "preset" (default gcc-c++17-O3) and applies
// the remaining keys. Unknown keys raise Error{ConfigError}.
Toolchain toolchain_from_json(const nlohmann::json& j);

std::string compiler_binary();

enum class CompileStatus { Ok, Error, Timeout };
enum class RunStatus { Ok, RuntimeError, Timeout, OutputLimit, NotRun };
std::string to_string(CompileStatus s);
std::string to_string(RunStatus s);

struct CompileResult {
  CompileStatus status = CompileStatus::Error;
  std::string diagnostics;  // compiler stderr+stdout, verbatim
  std::filesystem::path src;
  std::filesystem::path bin;  // valid when status == Ok
  double seconds = 0.0;
  bool cached = false;
};

struct ExecutionResult {
  CompileStatus compile = CompileStatus::Ok;
  std::string compile_diagnostics;
  RunStatus run = RunStatus::NotRun;
  std::string run_detail;  // exit code / signal description
  std::string stdout_text;
  std::string stderr_text;
  std::vector<double> wall_times_ms;
  std::string input_id;
  bool nondeterministic = false;

  double median_ms() const;  // 0 when nothing ran
  bool ran_ok() const { return compile == CompileStatus::Ok && run == RunStatus::Ok; }
};

nlohmann::json to_json(const ExecutionResult& r);

// Raw process execution with limits. Never throws for child failures.
struct ProcessLimits {
  double timeout_s = 10.0;
  std::size_t output_limit_bytes = 1 << 20;
  std::optional<std::size_t> address_space_bytes;
  std::optional<std::size_t> file_size_bytes;
};

struct ProcessResult {
  int exit_code = -1;
  int term_signal = 0;
  bool timed_out = false;
  bool output_limited = false;
  std::string out;
  std::string err;
  double wall_ms = 0.0;
  std::string spawn_error;
};

ProcessResult run_process(const std::vector<std::string>& argv, const std::string& stdin_data,
                          const ProcessLimits& limits, const std::filesystem::path& cwd);

// Compile/run harness rooted at a scratch directory. Each compile gets its own
// job directory `workdir/<job_id>/`; compiled artifacts are cached by the hash
// of source and toolchain. Safe to use from several threads.
//
// This is a resource-limit harness (rlimits, process groups, timeouts), not a
// security boundary: run untrusted code inside a VM or container.
class Sandbox {
 public:
  Sandbox(Toolchain toolchain, std::filesystem::path workdir);

  const Toolchain& toolchain() const { return toolchain_; }
  const std::filesystem::path& workdir() const { return workdir_; }

  CompileResult compile(const std::string& source);
  // run_timeout_s overrides the toolchain timeout when positive.
  ExecutionResult run(const CompileResult& handle, const std::string& input, int repetitions = 1,
                      const std::string& input_id = "", double run_timeout_s = 0.0);
  ExecutionResult compile_and_run(const std::string& source, const std::string& input,
                                  int repetitions = 1, const std::string& input_id = "");

 private:
  std::filesystem::path new_job_dir();

  Toolchain toolchain_;
  std::filesystem::path workdir_;
  std::atomic<std::uint64_t> next_job_{0};
  std::mutex cache_mu_;
  std::map<std::string, CompileResult> cache_;
};

struct TestRun {
  std::string test_id;
  ExecutionResult result;
  bool passed = false;
};

struct ProgramMeasurement {
  CompileResult compile;
  std::vector<TestRun> per_test;
  double total_ms = 0.0;  // sum of per-test median wall times
  bool all_passed = false;
};

ProgramMeasurement measure_program(Sandbox& sandbox, const std::string& source,
                                   const std::vector<TestCase>& tests, int repetitions,
                                   const OutputPolicy& policy = {});

struct PairMeasurement {
  double slow_ms = 0.0;
  double fast_ms = 0.0;
  bool fast_correct = false;
  // Only meaningful when some tests are Trusted.
  bool slow_verified = true;
  ProgramMeasurement slow;
  ProgramMeasurement fast;
  std::vector<std::string> warnings;
};

PairMeasurement measure_pair(Sandbox& sandbox, const std::string& slow_src,
                             const std::string& fast_src, const std::vector<TestCase>& tests,
                             int repetitions = 5, const OutputPolicy& policy = {});

}  // namespace optbench
