#include "optbench/pairing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "optbench/error.hpp"
#include "optbench/util.hpp"

namespace optbench {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Perspective p) {
  return p == Perspective::UserOriented ? "UserOriented" : "ProblemOriented";
}

std::string to_string(PairMode m) {
  return m == PairMode::Consecutive ? "consecutive" : "all_forward";
}

Perspective parse_perspective(const std::string& s) {
  const std::string l = to_lower(s);
  if (l == "user" || l == "useroriented" || l == "user_oriented") return Perspective::UserOriented;
  if (l == "problem" || l == "problemoriented" || l == "problem_oriented")
    return Perspective::ProblemOriented;
  throw Error(ErrorKind::InvalidArgument, "unknown perspective '" + s + "'");
}

PairMode parse_pair_mode(const std::string& s) {
  const std::string l = to_lower(s);
  if (l == "consecutive") return PairMode::Consecutive;
  if (l == "all_forward" || l == "all-forward" || l == "allforward") return PairMode::AllForward;
  throw Error(ErrorKind::InvalidArgument, "unknown pairing mode '" + s + "'");
}

std::string OptimizationPair::pair_id() const {
  return slow.submission_id + "__" + fast.submission_id;
}

std::map<std::string, std::size_t> PairSet::counts_per_problem() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& p : pairs) ++counts[p.problem_id];
  return counts;
}

BuildOptions default_user_options() { return {PairMode::Consecutive, true, true}; }
BuildOptions default_problem_options() { return {PairMode::AllForward, true, true}; }

namespace {

json params_json(const BuildOptions& o) {
  return json{{"mode", to_string(o.mode)},
              {"require_faster", o.require_faster},
              {"drop_identical_source", o.drop_identical_source}};
}

// Appends the pairs of one ordered trajectory. `strict_only` forces the
// slow > fast filter regardless of mode (problem-oriented ties carry no
// optimization direction).
void emit_pairs(const std::vector<const Submission*>& traj, const BuildOptions& opts,
                Perspective perspective, bool strict_only, std::vector<OptimizationPair>& out) {
  std::vector<std::string> normalized;
  if (opts.drop_identical_source) {
    normalized.reserve(traj.size());
    for (const auto* s : traj) normalized.push_back(normalize_whitespace(s->source));
  }
  auto consider = [&](std::size_t i, std::size_t j, bool need_faster) {
    const Submission& slow = *traj[i];
    const Submission& fast = *traj[j];
    if (need_faster && !(slow.runtime_ms > fast.runtime_ms)) return;
    // A zero runtime leaves the ratio undefined.
    if (slow.runtime_ms <= 0.0 || fast.runtime_ms <= 0.0) return;
    if (opts.drop_identical_source && normalized[i] == normalized[j]) return;
    out.push_back({slow.problem_id, slow, fast, perspective, slow.runtime_ms / fast.runtime_ms,
                   std::nullopt, std::nullopt});
  };
  if (opts.mode == PairMode::Consecutive) {
    for (std::size_t i = 0; i + 1 < traj.size(); ++i)
      consider(i, i + 1, strict_only || opts.require_faster);
  } else {
    for (std::size_t i = 0; i < traj.size(); ++i)
      for (std::size_t j = i + 1; j < traj.size(); ++j) consider(i, j, true);
  }
}

std::size_t ceil_count(double ratio_times_n) {
  return static_cast<std::size_t>(std::ceil(ratio_times_n - 1e-9));
}

std::map<std::string, std::vector<std::size_t>> group_by_problem(const PairSet& set) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < set.pairs.size(); ++i) groups[set.pairs[i].problem_id].push_back(i);
  return groups;
}

PairSet keep_indices(const PairSet& in, std::vector<std::size_t> keep, json step) {
  std::sort(keep.begin(), keep.end());
  PairSet out;
  out.pairs.reserve(keep.size());
  for (auto i : keep) out.pairs.push_back(in.pairs[i]);
  out.provenance = in.provenance;
  out.provenance.push_back(std::move(step));
  return out;
}

bool rank_before(const OptimizationPair& a, const OptimizationPair& b) {
  if (a.label_speedup != b.label_speedup) return a.label_speedup > b.label_speedup;
  if (a.slow.submission_id != b.slow.submission_id)
    return a.slow.submission_id < b.slow.submission_id;
  return a.fast.submission_id < b.fast.submission_id;
}

}  // namespace

PairSet build_user_oriented(const Corpus& corpus, const BuildOptions& opts) {
  PairSet set;
  for (const auto& [pid, subs] : corpus.problems) {
    std::map<std::string, std::vector<const Submission*>> per_user;
    for (const auto& s : subs)
      if (s.accepted()) per_user[s.user_id].push_back(&s);
    for (auto& [uid, traj] : per_user) {
      std::stable_sort(traj.begin(), traj.end(),
                       [](auto* a, auto* b) { return a->seq_index < b->seq_index; });
      emit_pairs(traj, opts, Perspective::UserOriented, false, set.pairs);
    }
  }
  set.provenance.push_back(json{{"op", "build_user_oriented"}, {"params", params_json(opts)}});
  return set;
}

PairSet build_problem_oriented(const Corpus& corpus, const BuildOptions& opts) {
  PairSet set;
  for (const auto& [pid, subs] : corpus.problems) {
    std::vector<const Submission*> traj;
    for (const auto& s : subs)
      if (s.accepted()) traj.push_back(&s);
    // Slowest first; ties broken by submission id.
    std::sort(traj.begin(), traj.end(), [](auto* a, auto* b) {
      if (a->runtime_ms != b->runtime_ms) return a->runtime_ms > b->runtime_ms;
      return a->submission_id < b->submission_id;
    });
    emit_pairs(traj, opts, Perspective::ProblemOriented, true, set.pairs);
  }
  set.provenance.push_back(
      json{{"op", "build_problem_oriented"}, {"params", params_json(opts)}});
  return set;
}

SubsetResult select_top_speedup(const PairSet& pairs,
                                const std::map<std::string, std::size_t>& quota) {
  SubsetResult result;
  auto groups = group_by_problem(pairs);
  std::vector<std::size_t> keep;
  for (auto& [pid, idx] : groups) {
    auto q = quota.find(pid);
    if (q == quota.end()) {
      result.report.warnings.push_back("no quota for problem '" + pid + "'; dropping its " +
                                       std::to_string(idx.size()) + " pairs");
      continue;
    }
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return rank_before(pairs.pairs[a], pairs.pairs[b]);
    });
    const std::size_t take = std::min(q->second, idx.size());
    if (q->second > idx.size()) result.report.shortfall[pid] = q->second - idx.size();
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
  }
  for (const auto& [pid, n] : quota) {
    if (!groups.count(pid))
      result.report.warnings.push_back(std::string(to_string(ErrorKind::QuotaForUnknownProblem)) +
                                       ": '" + pid + "' (quota " + std::to_string(n) + ")");
  }
  json qj = json::object();
  for (const auto& [pid, n] : quota) qj[pid] = n;
  result.set = keep_indices(pairs, std::move(keep),
                            json{{"op", "select_top_speedup"}, {"params", {{"quota", qj}}}});
  return result;
}

PairSet subset_percent(const PairSet& pairs, double percent, std::uint64_t seed) {
  if (!(percent > 0.0 && percent <= 100.0))
    throw Error(ErrorKind::InvalidPercent, "percent must be in (0, 100], got " +
                                               std::to_string(percent));
  const std::size_t n = pairs.pairs.size();
  const std::size_t k = std::min(n, ceil_count(percent * static_cast<double>(n) / 100.0));
  SeededRng rng(seed);
  return keep_indices(pairs, sample_indices(n, k, rng),
                      json{{"op", "subset_percent"},
                           {"params", {{"percent", percent}, {"seed", seed}}}});
}

SubsetResult subset_random_matched(const PairSet& pco_pool, const PairSet& pie,
                                   std::uint64_t seed) {
  SubsetResult result;
  auto pool_groups = group_by_problem(pco_pool);
  SeededRng rng(seed);
  std::vector<std::size_t> keep;
  for (const auto& [pid, want] : pie.counts_per_problem()) {
    auto it = pool_groups.find(pid);
    const std::size_t have = it == pool_groups.end() ? 0 : it->second.size();
    if (have < want) {
      result.report.shortfall[pid] = want - have;
      result.report.warnings.push_back(std::string(to_string(ErrorKind::InsufficientPool)) +
                                       ": '" + pid + "' has " + std::to_string(have) +
                                       " pool pairs for " + std::to_string(want) + " requested");
    }
    if (have == 0) continue;
    for (auto local : sample_indices(have, want, rng)) keep.push_back(it->second[local]);
  }
  result.set = keep_indices(pco_pool, std::move(keep),
                            json{{"op", "subset_random_matched"}, {"params", {{"seed", seed}}}});
  return result;
}

GedStratum parse_ged_stratum(const std::string& s) {
  const std::string l = to_lower(s);
  if (l == "high" || l == "highged") return GedStratum::HighGED;
  if (l == "low" || l == "lowged") return GedStratum::LowGED;
  if (l == "random") return GedStratum::Random;
  throw Error(ErrorKind::InvalidArgument, "unknown GED stratum '" + s + "'");
}

std::string to_string(GedStratum s) {
  switch (s) {
    case GedStratum::HighGED: return "HighGED";
    case GedStratum::LowGED: return "LowGED";
    case GedStratum::Random: return "Random";
  }
  return "Random";
}

PairSet subset_ged_stratified(const PairSet& pairs, GedStratum stratum, double fraction,
                              std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw Error(ErrorKind::InvalidFraction,
                "fraction must be in (0, 1], got " + std::to_string(fraction));
  for (const auto& p : pairs.pairs) {
    if (!p.ged)
      throw Error(ErrorKind::MissingGED, "pair " + p.problem_id + "/" + p.pair_id() +
                                             " has no GED annotation; run analyze first");
  }
  SeededRng rng(seed);
  std::vector<std::size_t> keep;
  for (auto& [pid, idx] : group_by_problem(pairs)) {
    const std::size_t k = std::min(idx.size(), ceil_count(fraction * static_cast<double>(idx.size())));
    if (stratum == GedStratum::Random) {
      for (auto local : sample_indices(idx.size(), k, rng)) keep.push_back(idx[local]);
      continue;
    }
    const bool high = stratum == GedStratum::HighGED;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const auto& pa = pairs.pairs[a];
      const auto& pb = pairs.pairs[b];
      if (*pa.ged != *pb.ged) return high ? *pa.ged > *pb.ged : *pa.ged < *pb.ged;
      return pa.pair_id() < pb.pair_id();
    });
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return keep_indices(pairs, std::move(keep),
                      json{{"op", "subset_ged_stratified"},
                           {"params",
                            {{"stratum", to_string(stratum)}, {"fraction", fraction}, {"seed", seed}}}});
}

std::uint64_t choose2(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

PairCounts count_formulas(const Corpus& corpus) {
  PairCounts c;
  for (const auto& [pid, subs] : corpus.problems) {
    std::map<std::string, std::uint64_t> n_u;
    for (const auto& s : subs)
      if (s.accepted()) ++n_u[s.user_id];
    std::uint64_t total = 0;
    for (const auto& [uid, n] : n_u) {
      c.user_oriented_allforward += choose2(n);
      total += n;
    }
    c.problem_oriented_allforward += choose2(total);
  }
  return c;
}

json to_json(const OptimizationPair& p) {
  json j{{"problem_id", p.problem_id},
         {"pair_id", p.pair_id()},
         {"slow_id", p.slow.submission_id},
         {"fast_id", p.fast.submission_id},
         {"slow_src", p.slow.source},
         {"fast_src", p.fast.source},
         {"perspective", to_string(p.perspective)},
         {"label_speedup", p.label_speedup},
         {"ged", nullptr},
         {"ged_exact", nullptr},
         {"slow_user", p.slow.user_id},
         {"fast_user", p.fast.user_id},
         {"slow_runtime_ms", p.slow.runtime_ms},
         {"fast_runtime_ms", p.fast.runtime_ms}};
  if (p.ged) j["ged"] = *p.ged;
  if (p.ged_exact) j["ged_exact"] = *p.ged_exact;
  return j;
}

OptimizationPair pair_from_json(const json& j) {
  OptimizationPair p;
  try {
    p.problem_id = j.at("problem_id").get<std::string>();
    p.slow.problem_id = p.fast.problem_id = p.problem_id;
    p.slow.submission_id = j.at("slow_id").get<std::string>();
    p.fast.submission_id = j.at("fast_id").get<std::string>();
    p.slow.source = j.at("slow_src").get<std::string>();
    p.fast.source = j.at("fast_src").get<std::string>();
    p.slow.status = p.fast.status = SubmissionStatus::Accepted;
    p.perspective = parse_perspective(j.at("perspective").get<std::string>());
    p.label_speedup = j.at("label_speedup").get<double>();
    if (auto it = j.find("ged"); it != j.end() && !it->is_null()) p.ged = it->get<double>();
    if (auto it = j.find("ged_exact"); it != j.end() && !it->is_null())
      p.ged_exact = it->get<bool>();
    p.slow.user_id = j.value("slow_user", "");
    p.fast.user_id = j.value("fast_user", "");
    p.slow.runtime_ms = j.value("slow_runtime_ms", 0.0);
    p.fast.runtime_ms = j.value("fast_runtime_ms", 0.0);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaViolation, std::string("bad pair record: ") + e.what());
  }
  return p;
}

fs::path provenance_path_for(const fs::path& jsonl_path) {
  fs::path p = jsonl_path;
  p.replace_extension(".provenance.json");
  return p;
}

void write_pairset(const PairSet& set, const fs::path& jsonl_path) {
  std::string body;
  for (const auto& p : set.pairs) {
    body += to_json(p).dump();
    body.push_back('\n');
  }
  write_file(jsonl_path.string(), body);
  write_file(provenance_path_for(jsonl_path).string(), set.provenance.dump(2) + "\n");
}

PairSet read_pairset(const fs::path& jsonl_path) {
  PairSet set;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(read_file(jsonl_path.string()))) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      set.pairs.push_back(pair_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::SchemaViolation,
                  jsonl_path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::error_code ec;
  const auto prov = provenance_path_for(jsonl_path);
  if (fs::is_regular_file(prov, ec)) set.provenance = json::parse(read_file(prov.string()));
  return set;
}

}  // namespace optbench
