#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "optbench/cfg.hpp"
#include "optbench/pairing.hpp"

namespace optbench {

// Directed graph with integer node and edge labels. At most one edge per
// ordered node pair.
struct LabeledGraph {
  std::vector<int> node_labels;
  std::map<std::pair<int, int>, int> edges;

  std::size_t size() const { return node_labels.size(); }
  void add_edge(int from, int to, int label) { edges[{from, to}] = label; }
};

// Parallel edges between the same blocks (rare) collapse to the smallest kind.
LabeledGraph to_labeled(const Cfg& cfg);

struct CostModel {
  double node_ins = 1.0;
  double node_del = 1.0;
  double node_sub = 1.0;  // charged only when labels differ
  double edge_ins = 1.0;
  double edge_del = 1.0;
  double edge_sub = 1.0;

  // Throws Error{InvalidCostModel} unless every cost is positive and finite.
  void validate() const;
};

struct GedResult {
  double distance = 0.0;
  bool exact = true;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  int node_ops = 0;  // non-free node operations on the reported edit path
  int edge_ops = 0;
  // mapping[i] = node of b matched to node i of a, or -1 when deleted.
  std::vector<int> mapping;
};

inline constexpr std::size_t kDefaultGedBudget = 12;

// Cost of the edit path induced by `mapping` (nodes of b left unmatched are
// inserted together with their edges).
double mapping_cost(const LabeledGraph& a, const LabeledGraph& b, const std::vector<int>& mapping,
                    const CostModel& costs, int* node_ops = nullptr, int* edge_ops = nullptr);

// Exact A* search when max(|a|, |b|) <= budget; otherwise (or when the search
// exceeds its expansion cap) a bracketed approximation with
// distance = upper_bound and exact = false.
GedResult ged(const LabeledGraph& a, const LabeledGraph& b,
              std::size_t budget = kDefaultGedBudget, const CostModel& costs = {});
GedResult ged(const Cfg& a, const Cfg& b, std::size_t budget = kDefaultGedBudget,
              const CostModel& costs = {});

struct AnnotateFailure {
  std::string pair_id;
  std::string reason;
};

struct AnnotateReport {
  std::vector<AnnotateFailure> failures;
  std::size_t approximate = 0;
};

// Fills pair.ged / pair.ged_exact from the CFGs of the two sources. Pairs whose
// sources fail to parse keep ged = null and are listed in the report.
AnnotateReport annotate_pairs(PairSet& pairs, std::size_t budget = kDefaultGedBudget,
                              const CostModel& costs = {}, unsigned workers = 0);

struct HistogramRow {
  std::optional<double> lo;  // nullopt for the null bucket
  std::optional<double> hi;
  std::size_t count_user = 0;
  std::size_t count_problem = 0;
};

// Buckets [k*w, (k+1)*w) covering both sets, followed by one null bucket.
std::vector<HistogramRow> ged_histogram(const PairSet& user, const PairSet& problem,
                                        double bucket_width = 1.0);
std::string histogram_csv(const std::vector<HistogramRow>& rows);

}  // namespace optbench
