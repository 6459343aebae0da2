#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace optbench {

enum class SubmissionStatus { Accepted, Rejected, Other };

std::string to_string(SubmissionStatus s);
SubmissionStatus parse_status(const std::string& s);

struct Submission {
  std::string problem_id;
  std::string user_id;
  std::string submission_id;
  int seq_index = 0;  // per (problem, user), contiguous from 0
  SubmissionStatus status = SubmissionStatus::Other;
  double runtime_ms = 0.0;  // judge-marked runtime; the pairing label
  std::string language;
  std::string source;

  bool accepted() const { return status == SubmissionStatus::Accepted; }
  bool operator==(const Submission&) const = default;
};

enum class TestStatus { Anchored, Synthetic, Trusted };

std::string to_string(TestStatus s);

struct TestCase {
  std::string id;
  std::string input;
  std::string expected;
  TestStatus status = TestStatus::Trusted;

  bool operator==(const TestCase&) const = default;
};

struct Corpus {
  // Submissions per problem, ordered by (user_id, seq_index).
  std::map<std::string, std::vector<Submission>> problems;
  std::map<std::string, std::vector<TestCase>> testsets;

  std::size_t submission_count() const;
  bool operator==(const Corpus&) const = default;
};

struct IngestReject {
  std::size_t record = 0;  // 1-based line (jsonl) or row (csv)
  std::string reason;
};

struct IngestResult {
  Corpus corpus;
  std::vector<IngestReject> rejects;
};

enum class ArchiveFormat { Jsonl, Csv };

ArchiveFormat parse_archive_format(const std::string& s);
// Guesses from the extension; anything but .csv is treated as jsonl.
ArchiveFormat archive_format_for(const std::filesystem::path& path);

// Parses a judge archive. Malformed records land in `rejects` with a reason.
// Throws Error{UnreadableArchive} when the file itself cannot be read.
IngestResult ingest(const std::filesystem::path& archive_path, ArchiveFormat format);

// Builds a corpus from already-decoded records (one JSON object each, same
// schema as the jsonl archive). `base_dir` resolves `source_path` entries.
IngestResult ingest_records(const std::vector<nlohmann::json>& records,
                            const std::filesystem::path& base_dir);

// Reads `root/<problem_id>/<case>.in` + `.out` pairs as Trusted test cases.
std::map<std::string, std::vector<TestCase>> load_testsets(
    const std::filesystem::path& root);
std::vector<TestCase> load_testset(const std::filesystem::path& problem_dir);

// Accepted submissions of one user for one problem, in submission order.
std::vector<Submission> valid_trajectory(const Corpus& corpus,
                                         const std::string& problem_id,
                                         const std::string& user_id);

nlohmann::json to_json(const Submission& s);

}  // namespace optbench
