#pragma once

#include <filesystem>
#include <string>

#include "optbench/corpus.hpp"
#include "optbench/util.hpp"

namespace testsupport {

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(OPTBENCH_FIXTURES) / rel;
}

inline std::string fixture_text(const std::string& rel) { return optbench::read_file(fixture(rel).string()); }

// Fresh scratch directory under the build tree, wiped on creation.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::path(OPTBENCH_SCRATCH) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline optbench::Submission sub(const std::string& problem, const std::string& user, const std::string& id,
                                int seq, double runtime, const std::string& source,
                                optbench::SubmissionStatus st = optbench::SubmissionStatus::Accepted) {
  optbench::Submission s;
  s.problem_id = problem;
  s.user_id = user;
  s.submission_id = id;
  s.seq_index = seq;
  s.status = st;
  s.runtime_ms = runtime;
  s.language = "C++";
  s.source = source;
  return s;
}

}  // namespace testsupport
