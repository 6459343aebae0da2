#include "optbench/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <variant>

#include "optbench/error.hpp"
#include "optbench/util.hpp"

namespace optbench {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(SubmissionStatus s) {
  switch (s) {
    case SubmissionStatus::Accepted: return "Accepted";
    case SubmissionStatus::Rejected: return "Rejected";
    case SubmissionStatus::Other: return "Other";
  }
  return "Other";
}

SubmissionStatus parse_status(const std::string& s) {
  const std::string l = to_lower(trim(s));
  if (l == "accepted") return SubmissionStatus::Accepted;
  if (l == "rejected") return SubmissionStatus::Rejected;
  return SubmissionStatus::Other;
}

std::string to_string(TestStatus s) {
  switch (s) {
    case TestStatus::Anchored: return "Anchored";
    case TestStatus::Synthetic: return "Synthetic";
    case TestStatus::Trusted: return "Trusted";
  }
  return "Trusted";
}

std::size_t Corpus::submission_count() const {
  std::size_t n = 0;
  for (const auto& [_, subs] : problems) n += subs.size();
  return n;
}

ArchiveFormat parse_archive_format(const std::string& s) {
  const std::string l = to_lower(s);
  if (l == "jsonl") return ArchiveFormat::Jsonl;
  if (l == "csv") return ArchiveFormat::Csv;
  throw Error(ErrorKind::InvalidArgument, "unknown archive format '" + s + "'");
}

ArchiveFormat archive_format_for(const fs::path& path) {
  return to_lower(path.extension().string()) == ".csv" ? ArchiveFormat::Csv
                                                       : ArchiveFormat::Jsonl;
}

namespace {

// Chronological key: an integer `seq`, a numeric timestamp, or an ISO-8601
// timestamp string (lexicographic order is chronological for those).
using OrderKey = std::variant<double, std::string>;

struct Pending {
  Submission sub;
  OrderKey order;
  std::size_t record;
};

std::optional<std::string> string_field(const json& rec, const char* key) {
  auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  if (it->is_number()) {
    std::ostringstream ss;
    ss << it->get<double>();
    return ss.str();
  }
  return std::nullopt;
}

std::optional<double> number_field(const json& rec, const char* key) {
  auto it = rec.find(key);
  if (it == rec.end() || it->is_null()) return std::nullopt;
  if (it->is_number()) return it->get<double>();
  if (it->is_string()) {
    const std::string s = trim(it->get<std::string>());
    if (s.empty()) return std::nullopt;
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

// Returns a reject reason, or nullopt when the record is well formed.
std::optional<std::string> decode_record(const json& rec, const fs::path& base_dir,
                                         Pending& out) {
  if (!rec.is_object()) return "record is not a JSON object";
  Submission& s = out.sub;
  for (const char* key : {"problem_id", "user_id", "submission_id", "status"}) {
    auto v = string_field(rec, key);
    if (!v || trim(*v).empty()) return std::string("missing required field '") + key + "'";
  }
  s.problem_id = *string_field(rec, "problem_id");
  s.user_id = *string_field(rec, "user_id");
  s.submission_id = *string_field(rec, "submission_id");
  s.status = parse_status(*string_field(rec, "status"));
  s.language = string_field(rec, "language").value_or("");

  auto runtime = number_field(rec, "runtime_ms");
  if (!runtime) return "missing required field 'runtime_ms'";
  if (!std::isfinite(*runtime) || *runtime < 0.0)
    return "runtime_ms must be finite and non-negative";
  s.runtime_ms = *runtime;

  if (auto seq = number_field(rec, "seq")) {
    out.order = *seq;
  } else if (auto ts = number_field(rec, "timestamp")) {
    out.order = *ts;
  } else if (auto tss = string_field(rec, "timestamp"); tss && !trim(*tss).empty()) {
    out.order = *tss;
  } else {
    return "missing required field 'seq' or 'timestamp'";
  }

  if (auto src = string_field(rec, "source")) {
    s.source = *src;
  } else if (auto rel = string_field(rec, "source_path"); rel && !rel->empty()) {
    const fs::path p = base_dir / *rel;
    std::ifstream in(p, std::ios::binary);
    if (!in) return "source_path '" + *rel + "' is unreadable";
    std::ostringstream ss;
    ss << in.rdbuf();
    s.source = ss.str();
  } else {
    return "missing required field 'source' or 'source_path'";
  }
  if (s.accepted() && trim(s.source).empty()) return "Accepted submission with empty source";
  return std::nullopt;
}

// RFC 4180 reader: quoted fields may contain commas, quotes ("") and newlines.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
      if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
      row.clear();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (field_started || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

IngestResult ingest_records(const std::vector<json>& records, const fs::path& base_dir) {
  IngestResult result;
  std::map<std::pair<std::string, std::string>, std::vector<Pending>> by_user;
  std::map<std::string, std::set<std::string>> seen_ids;

  for (std::size_t i = 0; i < records.size(); ++i) {
    Pending p;
    p.record = i + 1;
    if (auto reason = decode_record(records[i], base_dir, p)) {
      result.rejects.push_back({p.record, *reason});
      continue;
    }
    if (!seen_ids[p.sub.problem_id].insert(p.sub.submission_id).second) {
      result.rejects.push_back(
          {p.record, "duplicate submission_id '" + p.sub.submission_id + "' in problem '" +
                         p.sub.problem_id + "'"});
      continue;
    }
    by_user[{p.sub.problem_id, p.sub.user_id}].push_back(std::move(p));
  }

  // by_user iterates in (problem, user) order, so each problem's list ends up
  // ordered by (user_id, seq_index).
  for (auto& [key, subs] : by_user) {
    std::stable_sort(subs.begin(), subs.end(), [](const Pending& a, const Pending& b) {
      if (a.order != b.order) return a.order < b.order;
      if (a.sub.submission_id != b.sub.submission_id)
        return a.sub.submission_id < b.sub.submission_id;
      return a.record < b.record;
    });
    auto& list = result.corpus.problems[key.first];
    int seq = 0;
    for (auto& p : subs) {
      p.sub.seq_index = seq++;
      list.push_back(std::move(p.sub));
    }
  }
  return result;
}

IngestResult ingest(const fs::path& archive_path, ArchiveFormat format) {
  std::error_code ec;
  if (!fs::is_regular_file(archive_path, ec))
    throw Error(ErrorKind::UnreadableArchive, "no such archive: " + archive_path.string());
  const std::string text = read_file(archive_path.string());
  const fs::path base_dir = archive_path.parent_path();

  std::vector<json> records;
  std::vector<IngestReject> early_rejects;
  if (format == ArchiveFormat::Jsonl) {
    std::size_t line_no = 0;
    std::vector<std::size_t> line_of_record;
    for (const auto& line : split_lines(text)) {
      ++line_no;
      if (trim(line).empty()) continue;
      try {
        records.push_back(json::parse(line));
        line_of_record.push_back(line_no);
      } catch (const json::parse_error& e) {
        early_rejects.push_back({line_no, std::string("invalid JSON: ") + e.what()});
      }
    }
    IngestResult r = ingest_records(records, base_dir);
    for (auto& rej : r.rejects) rej.record = line_of_record[rej.record - 1];
    r.rejects.insert(r.rejects.end(), early_rejects.begin(), early_rejects.end());
    std::sort(r.rejects.begin(), r.rejects.end(),
              [](const auto& a, const auto& b) { return a.record < b.record; });
    return r;
  }

  auto rows = parse_csv(text);
  if (rows.empty()) return {};
  const auto header = rows.front();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    json obj = json::object();
    for (std::size_t c = 0; c < header.size() && c < rows[r].size(); ++c) {
      const std::string name = trim(header[c]);
      if (rows[r][c].empty()) {
        obj[name] = nullptr;
      } else {
        obj[name] = rows[r][c];
      }
    }
    records.push_back(std::move(obj));
  }
  IngestResult r = ingest_records(records, base_dir);
  for (auto& rej : r.rejects) rej.record += 1;  // header occupies row 1
  return r;
}

std::vector<TestCase> load_testset(const fs::path& problem_dir) {
  std::vector<TestCase> cases;
  std::error_code ec;
  if (!fs::is_directory(problem_dir, ec)) return cases;
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(problem_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".in")
      inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());
  for (const auto& in : inputs) {
    fs::path out = in;
    out.replace_extension(".out");
    if (!fs::is_regular_file(out, ec)) continue;
    cases.push_back({in.stem().string(), read_file(in.string()), read_file(out.string()),
                     TestStatus::Trusted});
  }
  return cases;
}

std::map<std::string, std::vector<TestCase>> load_testsets(const fs::path& root) {
  std::map<std::string, std::vector<TestCase>> sets;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) return sets;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    auto cases = load_testset(entry.path());
    if (!cases.empty()) sets[entry.path().filename().string()] = std::move(cases);
  }
  return sets;
}

std::vector<Submission> valid_trajectory(const Corpus& corpus, const std::string& problem_id,
                                         const std::string& user_id) {
  auto it = corpus.problems.find(problem_id);
  if (it == corpus.problems.end())
    throw Error(ErrorKind::UnknownProblem, "problem '" + problem_id + "' is not in the corpus");
  std::vector<Submission> out;
  for (const auto& s : it->second) {
    if (s.user_id == user_id && s.accepted()) out.push_back(s);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.seq_index < b.seq_index; });
  return out;
}

json to_json(const Submission& s) {
  return json{{"problem_id", s.problem_id},
              {"user_id", s.user_id},
              {"submission_id", s.submission_id},
              {"seq", s.seq_index},
              {"status", to_string(s.status)},
              {"runtime_ms", s.runtime_ms},
              {"language", s.language},
              {"source", s.source}};
}

}  // namespace optbench
