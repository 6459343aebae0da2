#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "optbench/corpus.hpp"

namespace optbench {

enum class Perspective { UserOriented, ProblemOriented };
enum class PairMode { Consecutive, AllForward };

std::string to_string(Perspective p);
std::string to_string(PairMode m);
Perspective parse_perspective(const std::string& s);  // "user"/"problem" or full name
PairMode parse_pair_mode(const std::string& s);

struct OptimizationPair {
  std::string problem_id;
  Submission slow;
  Submission fast;
  Perspective perspective = Perspective::UserOriented;
  double label_speedup = 1.0;  // slow.runtime_ms / fast.runtime_ms
  std::optional<double> ged;
  std::optional<bool> ged_exact;

  // "<slow_id>__<fast_id>"; unique within a problem.
  std::string pair_id() const;
  bool operator==(const OptimizationPair&) const = default;
};

// A pair list together with the recipe that produced it. `provenance` is an
// ordered list of steps, each `{"op": ..., "params": {...}}`.
struct PairSet {
  std::vector<OptimizationPair> pairs;
  nlohmann::json provenance = nlohmann::json::array();

  std::map<std::string, std::size_t> counts_per_problem() const;
};

struct BuildOptions {
  PairMode mode = PairMode::Consecutive;
  // Consecutive mode only: drop steps where the later program is not faster.
  bool require_faster = true;
  // Drop pairs whose sources are equal after whitespace normalization.
  bool drop_identical_source = true;
};

BuildOptions default_user_options();
BuildOptions default_problem_options();

PairSet build_user_oriented(const Corpus& corpus, const BuildOptions& opts = default_user_options());
PairSet build_problem_oriented(const Corpus& corpus,
                               const BuildOptions& opts = default_problem_options());

// Per-problem deficits/shortfalls and warnings emitted by subset operations.
struct SubsetReport {
  std::map<std::string, std::size_t> shortfall;
  std::vector<std::string> warnings;
};

struct SubsetResult {
  PairSet set;
  SubsetReport report;
};

// Keeps, per problem, the quota-many pairs with the largest label speedup.
// Problems without a quota entry keep nothing; quota entries for problems that
// have no pairs are reported as warnings (QuotaForUnknownProblem).
SubsetResult select_top_speedup(const PairSet& pairs,
                                const std::map<std::string, std::size_t>& quota);

// Uniform sample of ceil(percent/100 * N) pairs, without replacement.
PairSet subset_percent(const PairSet& pairs, double percent, std::uint64_t seed);

// Per problem, samples as many pairs from the pool as `pie` has.
SubsetResult subset_random_matched(const PairSet& pco_pool, const PairSet& pie,
                                   std::uint64_t seed);

enum class GedStratum { HighGED, LowGED, Random };
GedStratum parse_ged_stratum(const std::string& s);
std::string to_string(GedStratum s);

// Per problem, keeps ceil(fraction * n) pairs chosen by stratum.
PairSet subset_ged_stratified(const PairSet& pairs, GedStratum stratum, double fraction,
                              std::uint64_t seed);

struct PairCounts {
  std::uint64_t user_oriented_allforward = 0;
  std::uint64_t problem_oriented_allforward = 0;
};

// Sum over problems of sum_u C(n_u, 2) and of C(sum_u n_u, 2), with n_u the
// Accepted count per user. No 1/2 prefactor is applied.
PairCounts count_formulas(const Corpus& corpus);

std::uint64_t choose2(std::uint64_t n);

nlohmann::json to_json(const OptimizationPair& p);
OptimizationPair pair_from_json(const nlohmann::json& j);

void write_pairset(const PairSet& set, const std::filesystem::path& jsonl_path);
PairSet read_pairset(const std::filesystem::path& jsonl_path);
std::filesystem::path provenance_path_for(const std::filesystem::path& jsonl_path);

}  // namespace optbench
