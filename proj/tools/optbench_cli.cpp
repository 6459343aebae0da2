// optbench: command-line driver for pair construction, structural analysis,
// evaluation and verification runs. Exit codes: 0 ok, 1 domain failure,
// 2 usage or configuration error.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "optbench/anchor.hpp"
#include "optbench/config.hpp"
#include "optbench/corpus.hpp"
#include "optbench/error.hpp"
#include "optbench/ged.hpp"
#include "optbench/metrics.hpp"
#include "optbench/pairing.hpp"
#include "optbench/sandbox.hpp"
#include "optbench/util.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace optbench;

namespace {

struct Global {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::string log_level = "info";
};

// Output directory bookkeeping: every file written is listed in
// manifest.json with its hash; wall-clock timestamps go to run_info.json so
// the manifest itself stays reproducible.
class Run {
 public:
  Run(std::string command, const Config& cfg, const std::string& out_dir)
      : command_(std::move(command)), cfg_(cfg), started_(std::chrono::system_clock::now()) {
    if (out_dir.empty()) throw Error(ErrorKind::ConfigError, "--out (or paths.output) is required");
    out_ = out_dir;
    fs::create_directories(out_);
  }

  fs::path path(const std::string& name) const { return out_ / name; }

  void write(const std::string& name, const std::string& content) {
    write_file(path(name).string(), content);
    track(name);
  }

  void track(const std::string& name) {
    outputs_[name] = sha256_hex(read_file(path(name).string()));
  }

  void finish(const json& extra = json::object()) {
    write_file(path("config.resolved.json").string(), to_json(cfg_).dump(2) + "\n");
    json manifest = {{"command", command_}, {"config", "config.resolved.json"}, {"outputs", json::array()}};
    for (const auto& [name, sha] : outputs_) manifest["outputs"].push_back({{"file", name}, {"sha256", sha}});
    if (!extra.empty()) manifest["summary"] = extra;
    write_file(path("manifest.json").string(), manifest.dump(2) + "\n");
    const auto finished = std::chrono::system_clock::now();
    json info = {{"started_at", iso(started_)},
                 {"finished_at", iso(finished)},
                 {"duration_s", std::chrono::duration<double>(finished - started_).count()}};
    write_file(path("run_info.json").string(), info.dump(2) + "\n");
  }

 private:
  static std::string iso(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
  }

  std::string command_;
  const Config& cfg_;
  fs::path out_;
  std::map<std::string, std::string> outputs_;
  std::chrono::system_clock::time_point started_;
};

std::string jsonl(const std::vector<json>& rows) {
  std::string s;
  for (const auto& r : rows) s += r.dump() + "\n";
  return s;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidArgument:
    case ErrorKind::UnreadableArchive:
    case ErrorKind::AuthError:
    case ErrorKind::InvalidToolchain:
    case ErrorKind::InvalidPercent:
    case ErrorKind::InvalidFraction:
    case ErrorKind::InvalidQuota:
    case ErrorKind::UnknownTemplate:
      return 2;
    default:
      return 1;
  }
}

Corpus load_corpus(const std::string& path, std::size_t* rejects = nullptr) {
  if (path.empty()) throw Error(ErrorKind::ConfigError, "--corpus (or paths.corpus) is required");
  auto res = ingest(path, archive_format_for(path));
  if (rejects) *rejects = res.rejects.size();
  if (!res.rejects.empty()) spdlog::warn("{} malformed records skipped in {}", res.rejects.size(), path);
  return std::move(res.corpus);
}

// ------------------------------------------------------------------ ingest

int cmd_ingest(Config& cfg, const Global& g, const std::string& archive, const std::string& format,
               const std::string& tests) {
  const std::string path = archive.empty() ? cfg.paths.corpus : archive;
  if (path.empty()) throw Error(ErrorKind::ConfigError, "--archive is required");
  cfg.paths.corpus = path;
  const auto fmt = format.empty() ? archive_format_for(path) : parse_archive_format(format);
  const auto res = ingest(path, fmt);
  Run run("ingest", cfg, g.out.empty() ? cfg.paths.output : g.out);
  std::vector<json> rows;
  for (const auto& [pid, subs] : res.corpus.problems)
    for (const auto& s : subs) rows.push_back(to_json(s));
  run.write("corpus.jsonl", jsonl(rows));
  std::vector<json> rejects;
  for (const auto& r : res.rejects) rejects.push_back({{"record", r.record}, {"reason", r.reason}});
  run.write("rejects.jsonl", jsonl(rejects));
  json summary = {{"problems", res.corpus.problems.size()},
                  {"submissions", res.corpus.submission_count()},
                  {"rejects", res.rejects.size()}};
  const std::string tests_dir = tests.empty() ? cfg.paths.tests : tests;
  if (!tests_dir.empty()) {
    cfg.paths.tests = tests_dir;
    std::size_t n = 0;
    const auto sets = load_testsets(tests_dir);
    for (const auto& [pid, cases] : sets) n += cases.size();
    summary["testsets"] = sets.size();
    summary["test_cases"] = n;
  }
  run.write("ingest.json", summary.dump(2) + "\n");
  run.finish(summary);
  std::cout << "ingested " << res.corpus.submission_count() << " submissions across "
            << res.corpus.problems.size() << " problems";
  if (!res.rejects.empty()) std::cout << " (" << res.rejects.size() << " records rejected, see rejects.jsonl)";
  std::cout << "\n";
  return 0;
}

// ------------------------------------------------------------------- pairs

int cmd_pairs_build(Config& cfg, const Global& g, const std::string& corpus_path, const std::string& perspective,
                    const std::string& mode) {
  const std::string path = corpus_path.empty() ? cfg.paths.corpus : corpus_path;
  cfg.paths.corpus = path;
  const Corpus corpus = load_corpus(path);
  const Perspective p = parse_perspective(perspective);
  BuildOptions opts;
  opts.require_faster = cfg.pairing.require_faster;
  opts.drop_identical_source = cfg.pairing.drop_identical_source;
  opts.mode = p == Perspective::UserOriented ? cfg.pairing.user_mode : cfg.pairing.problem_mode;
  if (!mode.empty()) opts.mode = parse_pair_mode(mode);
  PairSet set = p == Perspective::UserOriented ? build_user_oriented(corpus, opts) : build_problem_oriented(corpus, opts);
  Run run("pairs build", cfg, g.out.empty() ? cfg.paths.output : g.out);
  const std::string name = p == Perspective::UserOriented ? "pairs_user.jsonl" : "pairs_problem.jsonl";
  write_pairset(set, run.path(name));
  run.track(name);
  run.track(provenance_path_for(run.path(name)).filename().string());
  json summary = {{"perspective", to_string(p)}, {"mode", to_string(opts.mode)}, {"pairs", set.pairs.size()}};
  run.finish(summary);
  std::cout << set.pairs.size() << " " << to_string(p) << " pairs -> " << run.path(name).string() << "\n";
  return 0;
}

std::map<std::string, std::size_t> read_quota(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, "quota file: " + std::string(e.what()));
  }
  if (!j.is_object()) throw Error(ErrorKind::InvalidQuota, "quota file must map problem ids to counts");
  std::map<std::string, std::size_t> q;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw Error(ErrorKind::InvalidQuota, "quota for '" + k + "' must be a non-negative integer");
    q[k] = v.get<std::size_t>();
  }
  return q;
}

int cmd_pairs_subset(Config& cfg, const Global& g, const std::string& pairs_path, const std::string& quota,
                     std::optional<double> percent, const std::string& matched, const std::string& ged,
                     std::optional<double> fraction) {
  const int chosen = !quota.empty() + percent.has_value() + !matched.empty() + !ged.empty();
  if (chosen != 1)
    throw Error(ErrorKind::InvalidArgument, "choose exactly one of --top-speedup, --percent, --random-matched, --ged");
  if (pairs_path.empty()) throw Error(ErrorKind::InvalidArgument, "--pairs is required");
  const PairSet pairs = read_pairset(pairs_path);
  SubsetResult res;
  if (!quota.empty()) {
    res = select_top_speedup(pairs, read_quota(quota));
  } else if (percent) {
    res.set = subset_percent(pairs, *percent, cfg.seed);
  } else if (!matched.empty()) {
    res = subset_random_matched(pairs, read_pairset(matched), cfg.seed);
  } else {
    if (!fraction) throw Error(ErrorKind::InvalidArgument, "--ged needs --fraction");
    res.set = subset_ged_stratified(pairs, parse_ged_stratum(ged), *fraction, cfg.seed);
  }
  for (const auto& w : res.report.warnings) spdlog::warn("{}", w);
  Run run("pairs subset", cfg, g.out.empty() ? cfg.paths.output : g.out);
  write_pairset(res.set, run.path("subset.jsonl"));
  run.track("subset.jsonl");
  run.track("subset.provenance.json");
  json summary = {{"input_pairs", pairs.pairs.size()}, {"selected", res.set.pairs.size()},
                  {"shortfall", res.report.shortfall}, {"warnings", res.report.warnings}};
  run.write("subset_report.json", summary.dump(2) + "\n");
  run.finish(summary);
  std::cout << res.set.pairs.size() << " of " << pairs.pairs.size() << " pairs selected\n";
  return 0;
}

int cmd_pairs_count(Config& cfg, const Global& g, const std::string& corpus_path) {
  const std::string path = corpus_path.empty() ? cfg.paths.corpus : corpus_path;
  cfg.paths.corpus = path;
  const Corpus corpus = load_corpus(path);
  const PairCounts c = count_formulas(corpus);
  const double ratio = c.user_oriented_allforward == 0
                           ? 0.0
                           : static_cast<double>(c.problem_oriented_allforward) / static_cast<double>(c.user_oriented_allforward);
  std::cout << "perspective        pairs\n"
            << "user-oriented      " << c.user_oriented_allforward << "\n"
            << "problem-oriented   " << c.problem_oriented_allforward << "\n"
            << "ratio              " << std::fixed << std::setprecision(2) << ratio << "x\n";
  const std::string out = g.out.empty() ? cfg.paths.output : g.out;
  json summary = {{"user_oriented", c.user_oriented_allforward},
                  {"problem_oriented", c.problem_oriented_allforward},
                  {"ratio", ratio}};
  if (!out.empty()) {
    Run run("pairs count", cfg, out);
    run.write("counts.json", summary.dump(2) + "\n");
    run.finish(summary);
  }
  return 0;
}

// ----------------------------------------------------------------- analyze

int cmd_analyze(Config& cfg, const Global& g, const std::string& user_path, const std::string& problem_path,
                std::optional<std::size_t> budget, std::optional<double> bucket) {
  if (user_path.empty() && problem_path.empty())
    throw Error(ErrorKind::InvalidArgument, "give --user-pairs and/or --problem-pairs");
  if (budget) cfg.analysis.budget = *budget;
  if (bucket) cfg.analysis.bucket_width = *bucket;
  const unsigned workers = cfg.workers ? cfg.workers : default_workers();
  Run run("analyze", cfg, g.out.empty() ? cfg.paths.output : g.out);
  PairSet user, problem;
  json summary = json::object();
  auto process = [&](const std::string& path, PairSet& set, const std::string& label) {
    if (path.empty()) return;
    set = read_pairset(path);
    const auto report = annotate_pairs(set, cfg.analysis.budget, CostModel{}, workers);
    const std::string name = label + ".ged.jsonl";
    write_pairset(set, run.path(name));
    run.track(name);
    run.track(label + ".ged.provenance.json");
    double sum = 0;
    std::size_t n = 0;
    for (const auto& p : set.pairs)
      if (p.ged) {
        sum += *p.ged;
        ++n;
      }
    json failures = json::array();
    for (const auto& f : report.failures) failures.push_back({{"pair_id", f.pair_id}, {"reason", f.reason}});
    summary[label] = {{"pairs", set.pairs.size()},
                      {"annotated", n},
                      {"null", report.failures.size()},
                      {"approximate", report.approximate},
                      {"mean_ged", n ? json(sum / static_cast<double>(n)) : json(nullptr)},
                      {"failures", failures}};
    for (const auto& f : report.failures) spdlog::warn("{}: {}", f.pair_id, f.reason);
  };
  process(user_path, user, "user");
  process(problem_path, problem, "problem");
  const auto rows = ged_histogram(user, problem, cfg.analysis.bucket_width);
  run.write("ged_histogram.csv", histogram_csv(rows));
  summary["budget"] = cfg.analysis.budget;
  run.write("analysis.json", summary.dump(2) + "\n");
  run.finish();
  for (const auto& label : {"user", "problem"}) {
    if (!summary.contains(label)) continue;
    const auto& s = summary[label];
    std::cout << label << ": " << s["annotated"] << " annotated, " << s["null"] << " null, "
              << s["approximate"] << " approximate, mean GED " << s["mean_ged"].dump() << "\n";
  }
  return 0;
}

// -------------------------------------------------------------------- eval

std::vector<fs::path> candidate_files(const fs::path& dir, const std::string& pair_id, const std::string& ext) {
  std::vector<fs::path> out;
  const fs::path sub = dir / pair_id;
  if (fs::is_directory(sub)) {
    for (const auto& e : fs::directory_iterator(sub))
      if (e.is_regular_file() && e.path().extension() == ext) out.push_back(e.path());
    std::sort(out.begin(), out.end());
  } else if (fs::is_regular_file(dir / (pair_id + ext))) {
    out.push_back(dir / (pair_id + ext));
  }
  return out;
}

CandidateOutcome assess(const ProgramMeasurement& m, double old_ms, const std::vector<TestCase>& tests) {
  CandidateOutcome c;
  c.old_ms = old_ms;
  c.correct = m.all_passed;
  c.new_ms = m.total_ms;
  if (m.compile.status != CompileStatus::Ok) {
    c.failure_mode = FailureMode::CompileFail;
  } else if (!m.all_passed) {
    for (std::size_t i = 0; i < m.per_test.size(); ++i)
      if (!m.per_test[i].passed) {
        c.failure_mode = classify_failure(m.per_test[i].result, tests[i].expected);
        // Passing only under a looser policy still counts as a format failure.
        if (!c.failure_mode) c.failure_mode = FailureMode::FormatFail;
        break;
      }
  }
  return c;
}

std::string failure_csv(const std::vector<EvalRecord>& records) {
  std::map<std::string, std::size_t> counts;
  std::size_t failed = 0;
  for (const auto& r : records)
    for (const auto& c : r.candidates)
      if (c.failure_mode) {
        ++counts[to_string(*c.failure_mode)];
        ++failed;
      }
  std::ostringstream os;
  os << "failure_mode,count,share\n";
  for (const auto* m : {"CompileFail", "FormatFail", "SemanticFail"}) {
    const std::size_t n = counts[m];
    os << m << ',' << n << ',' << (failed ? static_cast<double>(n) / static_cast<double>(failed) : 0.0) << '\n';
  }
  return os.str();
}

void print_summary(const std::string& title, const MetricsSummary& s) {
  std::cout << std::fixed << std::setprecision(2) << title << ": %Opt " << 100 * s.pct_opt << "  Speedup "
            << s.speedup_mean << "x  %Correct " << 100 * s.pct_correct << "  (n=" << s.n_records << ")\n";
}

int cmd_eval(Config& cfg, const Global& g, const std::string& pairs_path, const std::string& cand_dir,
             const std::string& tests_dir_arg, std::optional<int> k, std::optional<int> reps,
             const std::string& policy) {
  if (pairs_path.empty() || cand_dir.empty()) throw Error(ErrorKind::InvalidArgument, "--pairs and --candidates are required");
  if (k) cfg.metrics.k = *k;
  if (reps) cfg.metrics.repetitions = *reps;
  if (!policy.empty()) cfg.metrics.output_policy = parse_output_policy(policy);
  const std::string tests_dir = tests_dir_arg.empty() ? cfg.paths.tests : tests_dir_arg;
  if (tests_dir.empty()) throw Error(ErrorKind::InvalidArgument, "--tests (or paths.tests) is required");
  cfg.paths.tests = tests_dir;
  const PairSet pairs = read_pairset(pairs_path);
  const auto testsets = load_testsets(tests_dir);
  Run run("eval", cfg, g.out.empty() ? cfg.paths.output : g.out);
  const fs::path workdir = cfg.paths.workdir.empty() ? run.path("work") : fs::path(cfg.paths.workdir);
  Sandbox sandbox(cfg.toolchain, workdir);

  std::vector<std::optional<EvalRecord>> slots(pairs.pairs.size());
  std::vector<std::string> warnings;
  std::mutex warn_mu;
  auto warn = [&](const std::string& w) {
    spdlog::warn("{}", w);
    std::lock_guard lock(warn_mu);
    warnings.push_back(w);
  };
  const unsigned workers = cfg.workers ? cfg.workers : default_workers();
  parallel_for(pairs.pairs.size(), workers, [&](std::size_t i) {
    const auto& p = pairs.pairs[i];
    auto ts = testsets.find(p.problem_id);
    if (ts == testsets.end() || ts->second.empty()) {
      warn("pair " + p.pair_id() + ": no tests for problem " + p.problem_id + ", unjudgeable, excluded");
      return;
    }
    const auto& tests = ts->second;
    const auto slow = measure_program(sandbox, p.slow.source, tests, cfg.metrics.repetitions, cfg.metrics.output_policy);
    if (!slow.all_passed || !(slow.total_ms > 0)) {
      warn("pair " + p.pair_id() + ": reference program fails its tests, unjudgeable, excluded");
      return;
    }
    auto files = candidate_files(cand_dir, p.pair_id(), cfg.toolchain.source_ext);
    if (cfg.metrics.k > 0 && files.size() > static_cast<std::size_t>(cfg.metrics.k)) files.resize(cfg.metrics.k);
    if (files.empty()) warn("pair " + p.pair_id() + ": no candidates, counted as failure");
    EvalRecord rec;
    rec.pair_id = p.pair_id();
    for (const auto& f : files) {
      const auto m = measure_program(sandbox, read_file(f.string()), tests, cfg.metrics.repetitions, cfg.metrics.output_policy);
      rec.candidates.push_back(assess(m, slow.total_ms, tests));
    }
    slots[i] = best_of_k(std::move(rec));
  });
  std::vector<EvalRecord> records;
  std::vector<json> rows;
  for (auto& s : slots)
    if (s) {
      rows.push_back(to_json(*s));
      records.push_back(std::move(*s));
    }
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "no judgeable pairs");
  const auto summary = summarize(records);
  run.write("records.jsonl", jsonl(rows));
  json sj = to_json(summary);
  sj["warnings"] = warnings;
  run.write("summary.json", sj.dump(2) + "\n");
  run.write("failure_modes.csv", failure_csv(records));
  run.finish(to_json(summary));
  print_summary("eval", summary);
  return 0;
}

// ------------------------------------------------------------------ verify

struct JobRow {
  VerificationJob job;
  std::string problem_id;
};

std::vector<JobRow> read_jobs(const std::string& path) {
  const fs::path base = fs::path(path).parent_path();
  std::vector<JobRow> jobs;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(read_file(path))) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::SchemaViolation, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    auto text = [&](const char* inline_key, const char* path_key) -> std::string {
      if (j.contains(inline_key)) return j[inline_key].get<std::string>();
      if (j.contains(path_key)) return read_file((base / j[path_key].get<std::string>()).string());
      throw Error(ErrorKind::SchemaViolation,
                  path + ":" + std::to_string(line_no) + ": needs " + inline_key + " or " + path_key);
    };
    JobRow row;
    row.job.job_id = j.value("pair_id", j.value("job_id", "job-" + std::to_string(line_no)));
    row.problem_id = j.value("problem_id", std::string());
    row.job.slow_src = text("slow_src", "slow_path");
    row.job.candidate_src = text("candidate_src", "candidate_path");
    jobs.push_back(std::move(row));
  }
  return jobs;
}

int cmd_verify(Config& cfg, const Global& g, const std::string& method_name, const std::string& jobs_path,
               const std::string& tests_dir_arg, std::optional<int> max_iter, std::optional<int> n_inputs,
               const std::string& mock_script) {
  if (jobs_path.empty()) throw Error(ErrorKind::InvalidArgument, "--jobs is required");
  if (max_iter) cfg.verify.max_iterations = *max_iter;
  if (n_inputs) cfg.verify.n_inputs = *n_inputs;
  if (!mock_script.empty()) {
    cfg.llm.backend = "mock";
    cfg.llm.mock_script = mock_script;
  }
  const std::string tests_dir = tests_dir_arg.empty() ? cfg.paths.tests : tests_dir_arg;
  cfg.paths.tests = tests_dir;
  const VerificationMethod method = parse_verification_method(method_name);
  auto backend = make_backend(cfg.llm);  // fails fast on a missing key
  LlmClient llm(backend, client_options(cfg.llm));
  TemplateRegistry templates;
  if (!cfg.llm.templates_dir.empty()) templates.load_overrides(cfg.llm.templates_dir);
  auto jobs = read_jobs(jobs_path);
  std::map<std::string, std::vector<TestCase>> trusted;
  if (!tests_dir.empty()) trusted = load_testsets(tests_dir);

  Run run("verify " + method_name, cfg, g.out.empty() ? cfg.paths.output : g.out);
  const fs::path workdir = cfg.paths.workdir.empty() ? run.path("work") : fs::path(cfg.paths.workdir);
  Sandbox sandbox(cfg.toolchain, workdir);
  AnchorContext ctx{llm, sandbox, templates, cfg.metrics.output_policy};

  for (auto& row : jobs) {
    row.job.method = method;
    row.job.max_iterations = cfg.verify.max_iterations;
    row.job.n_inputs = cfg.verify.n_inputs;
    auto it = trusted.find(row.problem_id.empty() ? row.job.job_id : row.problem_id);
    if (it == trusted.end()) it = trusted.find(row.job.job_id);
    if (it != trusted.end()) row.job.trusted_tests = it->second;
  }
  std::vector<VerificationOutcome> outcomes(jobs.size());
  const unsigned workers = cfg.workers ? cfg.workers : default_workers();
  parallel_for(jobs.size(), workers, [&](std::size_t i) { outcomes[i] = run_verification(jobs[i].job, ctx); });

  // Before/after metrics on the held-out tests.
  std::vector<EvalRecord> before, after;
  std::size_t repaired = 0, passed = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i].job;
    const auto& o = outcomes[i];
    passed += o.passed ? 1 : 0;
    if (job.trusted_tests.empty()) {
      spdlog::warn("job {}: no trusted tests, excluded from the before/after table", job.job_id);
      continue;
    }
    const auto& tests = job.trusted_tests;
    const auto slow = measure_program(sandbox, job.slow_src, tests, cfg.metrics.repetitions, cfg.metrics.output_policy);
    if (!slow.all_passed) {
      spdlog::error("job {}: reference program fails its trusted tests, excluded", job.job_id);
      continue;
    }
    const auto cand = measure_program(sandbox, job.candidate_src, tests, cfg.metrics.repetitions, cfg.metrics.output_policy);
    const auto fin = o.final_src == job.candidate_src
                         ? cand
                         : measure_program(sandbox, o.final_src, tests, cfg.metrics.repetitions, cfg.metrics.output_policy);
    before.push_back(best_of_k(EvalRecord{job.job_id, {assess(cand, slow.total_ms, tests)}, std::nullopt}));
    after.push_back(best_of_k(EvalRecord{job.job_id, {assess(fin, slow.total_ms, tests)}, std::nullopt}));
    if (!cand.all_passed && fin.all_passed) ++repaired;
  }
  std::vector<json> rows;
  for (const auto& o : outcomes) rows.push_back(to_json(o));
  run.write("outcomes.jsonl", jsonl(rows));
  run.write("stage_costs.csv", stage_costs_csv(outcomes));
  json summary = {{"method", to_string(method)},
                  {"jobs", jobs.size()},
                  {"passed", passed},
                  {"repaired", repaired},
                  {"max_iterations", cfg.verify.max_iterations}};
  if (!before.empty()) {
    const auto b = summarize(before);
    const auto a = summarize(after);
    summary["before"] = to_json(b);
    summary["after"] = to_json(a);
    summary["delta"] = {{"pct_opt", a.pct_opt - b.pct_opt},
                        {"speedup_mean", a.speedup_mean - b.speedup_mean},
                        {"pct_correct", a.pct_correct - b.pct_correct}};
    print_summary("before", b);
    print_summary("after ", a);
    std::cout << std::fixed << std::setprecision(2) << "delta : %Opt " << 100 * (a.pct_opt - b.pct_opt)
              << "  Speedup " << a.speedup_mean - b.speedup_mean << "x  %Correct "
              << 100 * (a.pct_correct - b.pct_correct) << "\n";
  }
  run.write("summary.json", summary.dump(2) + "\n");
  run.finish(summary);
  std::cout << to_string(method) << ": " << passed << "/" << jobs.size() << " passed their own tests, " << repaired
            << " repaired on trusted tests\n";
  std::cout << stage_costs_csv(outcomes);
  return 0;
}

// ------------------------------------------------------------------ report

std::vector<double> read_numbers(const std::string& path) {
  std::string text = read_file(path);
  for (char& c : text)
    if (c == ',' || c == '[' || c == ']' || c == ';') c = ' ';
  std::vector<double> out;
  for (const auto& tok : split_whitespace(text)) {
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorKind::SchemaViolation, path + ": not a number: '" + tok + "'");
    }
  }
  return out;
}

EvalRecord record_from_json(const json& j) {
  EvalRecord r;
  r.pair_id = j.value("pair_id", std::string());
  for (const auto& c : j.at("candidates")) {
    CandidateOutcome o;
    o.correct = c.at("correct").get<bool>();
    o.old_ms = c.at("old_ms").get<double>();
    o.new_ms = c.at("new_ms").get<double>();
    if (c.contains("failure_mode") && !c["failure_mode"].is_null()) {
      const auto m = c["failure_mode"].get<std::string>();
      o.failure_mode = m == "CompileFail" ? FailureMode::CompileFail
                       : m == "FormatFail" ? FailureMode::FormatFail
                                           : FailureMode::SemanticFail;
    }
    r.candidates.push_back(o);
  }
  return r;
}

int cmd_report(Config& cfg, const Global& g, const std::vector<std::string>& summaries,
               const std::vector<std::string>& records_paths, const std::string& speed_a, const std::string& speed_b) {
  if (summaries.empty() && records_paths.empty() && speed_a.empty())
    throw Error(ErrorKind::EmptyInput, "nothing to report: give --summary, --records or --speedups-a/--speedups-b");
  if (speed_a.empty() != speed_b.empty())
    throw Error(ErrorKind::InvalidArgument, "--speedups-a and --speedups-b go together");
  Run run("report", cfg, g.out.empty() ? cfg.paths.output : g.out);
  json report = json::object();
  if (!summaries.empty()) {
    std::ostringstream csv;
    csv << "label,pct_opt,speedup_mean,pct_correct,n\n";
    for (const auto& entry : summaries) {
      const auto eq = entry.find('=');
      const std::string label = eq == std::string::npos ? fs::path(entry).parent_path().filename().string() : entry.substr(0, eq);
      const std::string path = eq == std::string::npos ? entry : entry.substr(eq + 1);
      json s;
      try {
        s = json::parse(read_file(path));
      } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaViolation, path + ": " + e.what());
      }
      if (s.contains("after")) s = s["after"];
      csv << label << ',' << s.at("pct_opt").get<double>() << ',' << s.at("speedup_mean").get<double>() << ','
          << s.at("pct_correct").get<double>() << ',' << s.at("n").get<std::size_t>() << '\n';
    }
    run.write("curve.csv", csv.str());
  }
  if (!records_paths.empty()) {
    std::vector<EvalRecord> records;
    for (const auto& p : records_paths)
      for (const auto& line : split_lines(read_file(p)))
        if (!trim(line).empty()) records.push_back(record_from_json(json::parse(line)));
    if (records.empty()) throw Error(ErrorKind::EmptyInput, "record files are empty");
    run.write("failure_modes.csv", failure_csv(records));
    std::size_t kmax = 0;
    for (const auto& r : records) kmax = std::max(kmax, r.candidates.size());
    std::ostringstream csv;
    csv << "k,pct_opt,speedup_mean,pct_correct\n";
    for (std::size_t k = 1; k <= kmax; ++k) {
      std::vector<EvalRecord> cut;
      for (auto r : records) {
        if (r.candidates.size() > k) r.candidates.resize(k);
        r.chosen.reset();
        cut.push_back(best_of_k(std::move(r)));
      }
      const auto s = summarize(cut);
      csv << k << ',' << s.pct_opt << ',' << s.speedup_mean << ',' << s.pct_correct << '\n';
    }
    run.write("bestk_scaling.csv", csv.str());
  }
  if (!speed_a.empty()) {
    const auto a = read_numbers(speed_a);
    const auto b = read_numbers(speed_b);
    const double r = pearson(a, b);
    report["pearson"] = {{"n", a.size()}, {"r", r}};
    run.write("pearson.csv", "n,r\n" + std::to_string(a.size()) + "," + std::to_string(r) + "\n");
    std::cout << "pearson r = " << std::setprecision(6) << r << " over " << a.size() << " pairs\n";
  }
  run.write("report.json", report.dump(2) + "\n");
  run.finish();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"optbench: optimization-pair construction, structural analysis, evaluation and verification"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--seed", g.seed, "RNG seed (overrides config)");
  app.add_option("--workers", g.workers, "Worker threads (overrides config)");
  app.add_option("--log-level", g.log_level, "trace|debug|info|warn|error")->capture_default_str();

  std::string archive, format, tests, corpus_path, perspective, mode, pairs_path, quota, matched, ged;
  std::optional<double> percent, fraction, bucket;
  std::optional<std::size_t> budget;
  std::string user_pairs, problem_pairs, candidates, policy, jobs, mock_script;
  std::optional<int> k, reps, max_iter, n_inputs;
  std::vector<std::string> summaries, records;
  std::string speed_a, speed_b;

  auto* ingest_cmd = app.add_subcommand("ingest", "Parse a judge archive into a corpus index");
  ingest_cmd->add_option("--archive", archive, "Archive file (.jsonl or .csv)");
  ingest_cmd->add_option("--format", format, "jsonl|csv (default: by extension)");
  ingest_cmd->add_option("--tests", tests, "Test-case root to summarize");

  auto* pairs_cmd = app.add_subcommand("pairs", "Build, subset and count optimization pairs");
  pairs_cmd->require_subcommand(1);
  auto* build_cmd = pairs_cmd->add_subcommand("build", "Construct a pair set");
  build_cmd->add_option("--corpus", corpus_path, "Archive or ingested corpus.jsonl");
  build_cmd->add_option("--perspective", perspective, "user|problem")->required();
  build_cmd->add_option("--mode", mode, "consecutive|all_forward");
  auto* subset_cmd = pairs_cmd->add_subcommand("subset", "Select a subset of a pair set");
  subset_cmd->add_option("--pairs", pairs_path, "Pair set JSONL")->required();
  subset_cmd->add_option("--top-speedup", quota, "JSON file {problem_id: quota}");
  subset_cmd->add_option("--percent", percent, "Uniform percentage (0, 100]");
  subset_cmd->add_option("--random-matched", matched, "Pair set whose per-problem counts to match");
  subset_cmd->add_option("--ged", ged, "high|low|random");
  subset_cmd->add_option("--fraction", fraction, "Fraction for --ged");
  auto* count_cmd = pairs_cmd->add_subcommand("count", "Compare all-forward pair counts of both perspectives");
  count_cmd->add_option("--corpus", corpus_path, "Archive or ingested corpus.jsonl");

  auto* analyze_cmd = app.add_subcommand("analyze", "Annotate pairs with CFG edit distance and bucket it");
  analyze_cmd->add_option("--user-pairs", user_pairs, "User-oriented pair set");
  analyze_cmd->add_option("--problem-pairs", problem_pairs, "Problem-oriented pair set");
  analyze_cmd->add_option("--budget", budget, "Largest graph solved exactly");
  analyze_cmd->add_option("--bucket-width", bucket, "Histogram bucket width");

  auto* eval_cmd = app.add_subcommand("eval", "Measure candidate programs and report %Opt / Speedup / %Correct");
  eval_cmd->add_option("--pairs", pairs_path, "Pair set JSONL")->required();
  eval_cmd->add_option("--candidates", candidates, "Directory of <pair_id>/*.cpp or <pair_id>.cpp")->required();
  eval_cmd->add_option("--tests", tests, "Test-case root (<problem_id>/<case>.in/.out)");
  eval_cmd->add_option("--k", k, "Use the first k candidates per pair");
  eval_cmd->add_option("--repetitions", reps, "Timed runs per test");
  eval_cmd->add_option("--policy", policy, "exact|token|numeric[:eps]");

  auto* verify_cmd = app.add_subcommand("verify", "Repair candidates with a verification method");
  verify_cmd->require_subcommand(1);
  std::string method_name;
  for (const auto* name : {"anchor", "self-debug", "direct-test", "comparison"}) {
    auto* sub = verify_cmd->add_subcommand(name, std::string("Run the ") + name + " method");
    sub->add_option("--jobs", jobs, "Jobs JSONL {pair_id, problem_id?, slow_src|slow_path, candidate_src|candidate_path}")->required();
    sub->add_option("--tests", tests, "Trusted test root, by problem_id or pair_id");
    sub->add_option("--max-iterations", max_iter, "Refinement rounds");
    sub->add_option("--n-inputs", n_inputs, "Test inputs requested in stage 1");
    sub->add_option("--mock-script", mock_script, "Scripted replies (forces the mock backend)");
    sub->callback([&method_name, name] { method_name = name; });
  }

  auto* report_cmd = app.add_subcommand("report", "Merge run outputs into plotting CSVs");
  report_cmd->add_option("--summary", summaries, "label=summary.json (repeatable)");
  report_cmd->add_option("--records", records, "eval records.jsonl (repeatable)");
  report_cmd->add_option("--speedups-a", speed_a, "Speedups from the first timing backend");
  report_cmd->add_option("--speedups-b", speed_b, "Speedups from the second timing backend");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  auto logger = spdlog::stderr_color_mt("optbench");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    Config cfg = g.config_path.empty() ? Config{} : load_config(g.config_path);
    if (g.seed) cfg.seed = *g.seed;
    if (g.workers) cfg.workers = *g.workers;
    if (!g.out.empty()) cfg.paths.output = g.out;

    if (*ingest_cmd) return cmd_ingest(cfg, g, archive, format, tests);
    if (*build_cmd) return cmd_pairs_build(cfg, g, corpus_path, perspective, mode);
    if (*subset_cmd) return cmd_pairs_subset(cfg, g, pairs_path, quota, percent, matched, ged, fraction);
    if (*count_cmd) return cmd_pairs_count(cfg, g, corpus_path);
    if (*analyze_cmd) return cmd_analyze(cfg, g, user_pairs, problem_pairs, budget, bucket);
    if (*eval_cmd) return cmd_eval(cfg, g, pairs_path, candidates, tests, k, reps, policy);
    if (*verify_cmd) return cmd_verify(cfg, g, method_name, jobs, tests, max_iter, n_inputs, mock_script);
    if (*report_cmd) return cmd_report(cfg, g, summaries, records, speed_a, speed_b);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    const int code = exit_code_for(e);
    if (code == 2) std::cerr << "run with --help for usage\n";
    return code;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 2;
}
