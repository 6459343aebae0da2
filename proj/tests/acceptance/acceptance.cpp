// Acceptance checks. One PASS/FAIL line per criterion; `--only N` runs one.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>

#include <CLI11.hpp>

#include "ged_oracle.hpp"
#include "optbench/anchor.hpp"
#include "optbench/error.hpp"
#include "optbench/ged.hpp"
#include "optbench/metrics.hpp"
#include "optbench/pairing.hpp"
#include "verify_fixture.hpp"

using namespace optbench;
using testsupport::fixture;
using testsupport::fixture_text;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

BuildOptions all_forward(BuildOptions o) {
  o.mode = PairMode::AllForward;
  return o;
}

// 1
Verdict pair_count_formulas() {
  const auto t0 = Clock::now();
  std::mt19937_64 g(20240901);
  int mismatches = 0;
  for (int c = 0; c < 200; ++c) {
    Corpus corpus;
    std::uint64_t want_user = 0, want_problem = 0;
    const int problems = 1 + static_cast<int>(g() % 3);
    int sid = 0;
    for (int p = 0; p < problems; ++p) {
      const std::string pid = "p" + std::to_string(p);
      const int users = 1 + static_cast<int>(g() % 8);
      // distinct runtimes across the problem so runtime order is total
      std::vector<double> pool;
      for (int r = 0; r < 48; ++r) pool.push_back(1000 - 7 * r - static_cast<double>(p));
      std::shuffle(pool.begin(), pool.end(), g);
      std::size_t next = 0;
      std::uint64_t total = 0;
      for (int u = 0; u < users; ++u) {
        const int n = 1 + static_cast<int>(g() % 6);
        std::vector<double> rts(pool.begin() + next, pool.begin() + next + n);
        next += n;
        std::sort(rts.rbegin(), rts.rend());
        for (int k = 0; k < n; ++k) {
          const std::string id = "s" + std::to_string(sid++);
          corpus.problems[pid].push_back(
              testsupport::sub(pid, "u" + std::to_string(u), id, k, rts[k], "int main(){/*" + id + "*/}"));
        }
        want_user += static_cast<std::uint64_t>(n) * (n - 1) / 2;
        total += n;
      }
      want_problem += total * (total - 1) / 2;
    }
    const auto user = build_user_oriented(corpus, all_forward(default_user_options()));
    const auto problem = build_problem_oriented(corpus, all_forward(default_problem_options()));
    const auto counts = count_formulas(corpus);
    if (user.pairs.size() != want_user || problem.pairs.size() != want_problem ||
        counts.user_oriented_allforward != want_user || counts.problem_oriented_allforward != want_problem)
      ++mismatches;
  }
  const double s = seconds_since(t0);
  return {mismatches == 0 && s < 5.0, fmt("200 corpora, %d mismatches, %.2fs (limit 5s)", mismatches, s)};
}

// 2
Verdict scarcity_ratio() {
  Corpus corpus;
  int sid = 0;
  for (int u = 0; u < 10; ++u)
    for (int k = 0; k < 3; ++k) {
      const std::string id = "s" + std::to_string(sid++);
      corpus.problems["p"].push_back(
          testsupport::sub("p", "u" + std::to_string(u), id, k, 1000.0 - 10 * k - u * 0.5, "int main(){/*" + id + "*/}"));
    }
  const auto user = build_user_oriented(corpus, all_forward(default_user_options())).pairs.size();
  const auto problem = build_problem_oriented(corpus, all_forward(default_problem_options())).pairs.size();
  // 435/30 == 14.5 exactly  <=>  2*435 == 29*30
  const bool ok = user == 30 && problem == 435 && 2 * problem == 29 * user && problem >= 10 * user;
  return {ok, fmt("problem %zu / user %zu = %.4f (want 435/30 = 14.5, >= 10)", problem, user,
                  static_cast<double>(problem) / static_cast<double>(user))};
}

// 3
Verdict metric_semantics() {
  const auto t0 = Clock::now();
  std::mt19937_64 g(77);
  int bad = 0;
  std::vector<EvalRecord> records;
  long long oracle_opt = 0, oracle_correct = 0;
  for (int r = 0; r < 1000; ++r) {
    EvalRecord rec;
    rec.pair_id = "r" + std::to_string(r);
    const long long old_ms = 11 * (1 + static_cast<long long>(g() % 200));
    const int k = 1 + static_cast<int>(g() % 5);
    for (int c = 0; c < k; ++c) {
      CandidateOutcome o;
      o.correct = g() % 3 != 0;
      long long new_ms;
      switch (g() % 4) {
        case 0: new_ms = old_ms / 11 * 10; break;      // exactly 10% faster
        case 1: new_ms = old_ms / 11 * 10 + 1; break;  // just short of it
        case 2: new_ms = old_ms + 1 + static_cast<long long>(g() % 50); break;
        default: new_ms = 1 + static_cast<long long>(g() % old_ms); break;
      }
      o.old_ms = static_cast<double>(old_ms);
      o.new_ms = static_cast<double>(new_ms);
      rec.candidates.push_back(o);
    }
    // oracle: scan every candidate, integer comparisons only
    std::optional<std::size_t> pick;
    for (std::size_t c = 0; c < rec.candidates.size(); ++c) {
      const auto& o = rec.candidates[c];
      if (o.correct && (!pick || static_cast<long long>(o.new_ms) < static_cast<long long>(rec.candidates[*pick].new_ms)))
        pick = c;
    }
    const EvalRecord best = best_of_k(rec);
    if (best.chosen != pick) ++bad;
    bool want_opt = false;
    double want_speed = 1.0;
    if (pick) {
      const long long n = static_cast<long long>(rec.candidates[*pick].new_ms);
      want_opt = 11 * n <= 10 * old_ms;
      if (n < old_ms) want_speed = static_cast<double>(old_ms) / static_cast<double>(n);
    }
    if (record_optimized(best) != want_opt || record_speedup(best) != want_speed) ++bad;
    for (const auto& o : rec.candidates) {
      const long long n = static_cast<long long>(o.new_ms);
      const double floor_want = (o.correct && n < old_ms) ? static_cast<double>(old_ms) / n : 1.0;
      if (speedup(o.old_ms, o.new_ms, o.correct) != floor_want) ++bad;
      if (is_optimized(o.old_ms, o.new_ms, o.correct) != (o.correct && 11 * n <= 10 * old_ms)) ++bad;
    }
    oracle_opt += want_opt;
    oracle_correct += pick.has_value();
    records.push_back(rec);
  }
  const auto s = summarize(records);
  if (s.pct_opt != static_cast<double>(oracle_opt) / 1000.0 || s.pct_correct != static_cast<double>(oracle_correct) / 1000.0)
    ++bad;
  if (s.pct_opt > s.pct_correct) ++bad;
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 2.0,
          fmt("1000 records, %d disagreements, pct_opt %.3f <= pct_correct %.3f, %.2fs (limit 2s)", bad, s.pct_opt,
              s.pct_correct, secs)};
}

// 4
Verdict ged_oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 g(4242);
  int mismatch = 0, asym = 0, tri = 0, inexact = 0;
  for (int i = 0; i < 300; ++i) {
    const auto a = testsupport::random_graph(g, 5);
    const auto b = testsupport::random_graph(g, 5);
    const auto c = testsupport::random_graph(g, 5);
    const auto ab = ged(a, b), ba = ged(b, a), bc = ged(b, c), ac = ged(a, c);
    if (!ab.exact) ++inexact;
    if (std::abs(ab.distance - testsupport::brute_force_ged(a, b)) > 1e-9) ++mismatch;
    if (std::abs(ab.distance - ba.distance) > 1e-9) ++asym;
    if (ac.distance > ab.distance + bc.distance + 1e-9) ++tri;
  }
  const double s = seconds_since(t0);
  return {mismatch + asym + tri + inexact == 0 && s < 60.0,
          fmt("300 pairs <= 5 nodes: %d oracle mismatches, %d asymmetric, %d triangle violations, %d inexact, %.2fs",
              mismatch, asym, tri, inexact, s)};
}

// 5
Verdict structural_disparity() {
  const auto ingested = ingest(fixture("contrast/corpus.jsonl"), ArchiveFormat::Jsonl);
  auto user = build_user_oriented(ingested.corpus);
  auto problem = build_problem_oriented(ingested.corpus);
  const auto ru = annotate_pairs(user);
  const auto rp = annotate_pairs(problem);
  auto mean = [](const PairSet& s) {
    double sum = 0;
    for (const auto& p : s.pairs) sum += p.ged.value_or(0.0);
    return s.pairs.empty() ? 0.0 : sum / static_cast<double>(s.pairs.size());
  };
  const double mu = mean(user), mp = mean(problem);
  const bool ok = !user.pairs.empty() && !problem.pairs.empty() && ru.failures.empty() && rp.failures.empty() && mp > mu;
  return {ok, fmt("mean GED problem %.3f (%zu pairs) > user %.3f (%zu pairs)", mp, problem.pairs.size(), mu,
                  user.pairs.size())};
}

// 6
Verdict anchor_soundness() {
  const auto t0 = Clock::now();
  Sandbox sb(Toolchain{}, testsupport::scratch("acc_anchor20"));
  Sandbox fresh(Toolchain{}, testsupport::scratch("acc_anchor20_rerun"));
  std::mt19937_64 g(2020);
  std::size_t anchored = 0, mismatched = 0, dropped = 0, bad_drops = 0;
  const std::vector<std::string> malformed = {"abc", "-4", "3\n1 2"};
  for (int p = 1; p <= 20; ++p) {
    const std::string src = fixture_text(fmt("anchor20/p%02d.cpp", p));
    std::vector<std::string> inputs;
    for (int k = 0; k < 3; ++k) {
      const int n = 1 + static_cast<int>(g() % 8);
      std::string in = std::to_string(n) + "\n";
      for (int i = 0; i < n; ++i) in += std::to_string(static_cast<int>(g() % 2001) - 1000) + (i + 1 < n ? " " : "\n");
      inputs.push_back(in);
    }
    inputs.insert(inputs.end(), malformed.begin(), malformed.end());
    const auto set = stage2_anchor_outputs(src, inputs, sb);
    for (const auto& tc : set.cases) {
      ++anchored;
      const auto r = fresh.compile_and_run(src, tc.input);
      if (tc.status != TestStatus::Anchored || !r.ran_ok() || r.stdout_text != tc.expected) ++mismatched;
    }
    dropped += set.dropped.size();
    for (const auto& d : set.dropped)
      if (trim(d.reason).empty()) ++bad_drops;
    if (set.cases.size() != 3 || set.dropped.size() != malformed.size()) ++bad_drops;
  }
  const double s = seconds_since(t0);
  return {anchored == 60 && mismatched == 0 && bad_drops == 0 && s < 30.0,
          fmt("%zu anchored cases, %zu re-execution mismatches, %zu dropped (%zu without reason or misfiled), %.2fs",
              anchored, mismatched, dropped, bad_drops, s)};
}

// 7
Verdict case_study_one() {
  const std::string slow = fixture_text("case_study1/slow.cpp");
  testsupport::VerifyRig rig("case_study1/mock.jsonl", "acc_cs1");
  const auto inputs = stage1_generate_inputs(slow, rig.ctx, 3);
  const auto set = stage2_anchor_outputs(slow, inputs.inputs, rig.sandbox);
  std::string outs;
  for (const auto& c : set.cases) outs += (outs.empty() ? "" : ",") + trim(c.expected);

  testsupport::VerifyRig rig2("case_study1/mock.jsonl", "acc_cs1_e2e");
  VerificationJob job;
  job.job_id = "case1";
  job.slow_src = slow;
  job.candidate_src = fixture_text("case_study1/candidate.cpp");
  job.max_iterations = 1;
  const auto o = run_anchor_verification(job, rig2.ctx);
  // the final program must reproduce the anchored outputs on its own
  bool final_ok = o.passed;
  for (const auto& c : set.cases) final_ok &= rig2.sandbox.compile_and_run(o.final_src, c.input).stdout_text == c.expected;
  const bool ok = outs == "4,0,6" && final_ok && o.iterations_used <= 1;
  return {ok, fmt("anchored outputs {%s} (want {4,0,6}), final passes %s after %d iteration(s)", outs.c_str(),
                  final_ok ? "yes" : "no", o.iterations_used)};
}

std::vector<VerificationOutcome> run_batch(VerificationMethod m, int iters, const std::string& script,
                                           const std::string& scratch, int* repaired) {
  testsupport::VerifyRig rig(script, scratch);
  std::vector<VerificationOutcome> out;
  *repaired = 0;
  for (const auto& job : testsupport::verify_jobs(m, iters)) {
    out.push_back(run_verification(job, rig.ctx));
    if (!testsupport::candidate_trusted(job, rig.sandbox) && out.back().trusted_pass.value_or(false)) ++*repaired;
  }
  return out;
}

// 8
Verdict root_cause() {
  int anchor = 0, direct_wrong = 0, direct_perfect = 0;
  const auto a = run_batch(VerificationMethod::AnchorVerification, 3, "verify/mock.jsonl", "acc_rc_a", &anchor);
  run_batch(VerificationMethod::DirectTestGeneration, 3, "verify/mock_wrong_oracle.jsonl", "acc_rc_w", &direct_wrong);
  const auto d = run_batch(VerificationMethod::DirectTestGeneration, 3, "verify/mock.jsonl", "acc_rc_p", &direct_perfect);
  bool identical = a.size() == d.size();
  for (std::size_t i = 0; identical && i < a.size(); ++i)
    identical = a[i].passed == d[i].passed && a[i].trusted_pass == d[i].trusted_pass &&
                a[i].final_src == d[i].final_src && a[i].iterations_used == d[i].iterations_used;
  return {direct_wrong < anchor && identical && direct_perfect == anchor,
          fmt("repaired: anchor %d, direct-test wrong oracle %d, direct-test perfect oracle %d (outcomes %s)", anchor,
              direct_wrong, direct_perfect, identical ? "identical" : "differ")};
}

// 9
Verdict iteration_monotonicity() {
  std::vector<int> passes;
  std::vector<double> secs;
  for (int iters : {1, 3, 5}) {
    const auto t0 = Clock::now();
    int repaired = 0, n = 0;
    for (const auto& o : run_batch(VerificationMethod::AnchorVerification, iters, "verify/mock.jsonl",
                                   "acc_iter", &repaired))
      n += o.passed;
    passes.push_back(n);
    secs.push_back(seconds_since(t0));
  }
  const bool ok = passes[0] <= passes[1] && passes[1] <= passes[2] &&
                  *std::max_element(secs.begin(), secs.end()) < 60.0;
  return {ok, fmt("passes at 1/3/5 iterations: %d/%d/%d, slowest run %.2fs", passes[0], passes[1], passes[2],
                  *std::max_element(secs.begin(), secs.end()))};
}

// 10
Verdict pearson_table() {
  // speedup columns of the physical-hardware table (gem5, hardware)
  const std::vector<double> sim = {8.5, 12.2, 1.8, 5.1, 3.3, 15.4, 2.1};
  const std::vector<double> hw = {7.1, 10.3, 1.5, 6.2, 2.8, 12.8, 1.9};
  const double r = pearson(sim, hw);
  return {std::abs(r - 0.89) <= 0.05, fmt("r = %.5f over 7 rows (want 0.89 +/- 0.05)", r)};
}

// 11
Verdict sandbox_speedup() {
  const auto tests = load_testset(fixture("quadlin/tests/q"));
  const std::string slow = fixture_text("quadlin/slow.cpp"), fast = fixture_text("quadlin/fast.cpp");
  std::vector<std::string> verdicts;
  double first_speedup = 0;
  for (int run = 0; run < 3; ++run) {
    Sandbox sb(Toolchain{}, testsupport::scratch("acc_quadlin"));
    const auto m = measure_pair(sb, slow, fast, tests, 5);
    const double s = speedup(m.slow_ms, m.fast_ms, m.fast_correct);
    if (run == 0) first_speedup = s;
    verdicts.push_back(fmt("%d%d%d", m.fast_correct, s > 2.0, is_optimized(m.slow_ms, m.fast_ms, m.fast_correct)));
  }
  const bool stable = verdicts[0] == verdicts[1] && verdicts[1] == verdicts[2];
  return {tests.size() == 1 && stable && verdicts[0] == "111",
          fmt("speedup %.2fx (want > 2), verdict %s across 3 runs (%s)", first_speedup, verdicts[0].c_str(),
              stable ? "stable" : "unstable")};
}

// 12
Verdict best_of_k_monotone() {
  std::mt19937_64 g(512);
  int violations = 0;
  for (int r = 0; r < 500; ++r) {
    EvalRecord full;
    const double old_ms = 100.0 + static_cast<double>(g() % 900);
    const int k = 1 + static_cast<int>(g() % 8);
    for (int c = 0; c < k; ++c) {
      CandidateOutcome o;
      o.correct = g() % 2 == 0;
      o.old_ms = old_ms;
      o.new_ms = 1.0 + static_cast<double>(g() % 1200);
      full.candidates.push_back(o);
    }
    double prev_speed = 0;
    bool prev_opt = false;
    for (int j = 1; j <= k; ++j) {
      EvalRecord prefix;
      prefix.candidates.assign(full.candidates.begin(), full.candidates.begin() + j);
      const auto b = best_of_k(prefix);
      const double s = record_speedup(b);
      const bool opt = record_optimized(b);
      if (s < prev_speed || (prev_opt && !opt)) ++violations;
      prev_speed = s;
      prev_opt = opt;
    }
  }
  return {violations == 0, fmt("500 records, %d monotonicity violations", violations)};
}

struct Criterion {
  const char* name;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion (1-12)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {"pair-count formula equivalence", pair_count_formulas},
      {"problem/user pair ratio", scarcity_ratio},
      {"metric semantics vs brute force", metric_semantics},
      {"exact GED vs exhaustive search", ged_oracle_equivalence},
      {"structural disparity ordering", structural_disparity},
      {"anchored outputs reproduce", anchor_soundness},
      {"case study 1 end to end", case_study_one},
      {"wrong synthetic oracle repairs fewer", root_cause},
      {"iteration monotonicity", iteration_monotonicity},
      {"pearson on hardware table", pearson_table},
      {"quadratic vs n log n speedup", sandbox_speedup},
      {"best@k monotonicity", best_of_k_monotone},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (only && only != id) continue;
    Verdict v;
    try {
      v = criteria[i].run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s [%2d] %s: %s\n", v.pass ? "PASS" : "FAIL", id, criteria[i].name, v.detail.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed ? 1 : 0;
}
