#include "optbench/ged.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <queue>
#include <sstream>

#include <spdlog/spdlog.h>

#include "optbench/error.hpp"
#include "optbench/util.hpp"

namespace optbench {

LabeledGraph to_labeled(const Cfg& cfg) {
  LabeledGraph g;
  g.node_labels.reserve(cfg.nodes.size());
  for (const auto& n : cfg.nodes) g.node_labels.push_back(static_cast<int>(n.kind));
  for (const auto& e : cfg.edges) {
    auto key = std::make_pair(e.from, e.to);
    const int label = static_cast<int>(e.kind);
    auto it = g.edges.find(key);
    if (it == g.edges.end() || label < it->second) g.edges[key] = label;
  }
  return g;
}

void CostModel::validate() const {
  const double all[] = {node_ins, node_del, node_sub, edge_ins, edge_del, edge_sub};
  for (double c : all)
    if (!std::isfinite(c) || c <= 0.0)
      throw Error(ErrorKind::InvalidCostModel, "edit costs must be positive and finite");
}

double mapping_cost(const LabeledGraph& a, const LabeledGraph& b, const std::vector<int>& mapping,
                    const CostModel& costs, int* node_ops, int* edge_ops) {
  double cost = 0.0;
  int nops = 0;
  int eops = 0;
  std::vector<bool> used(b.size(), false);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int m = mapping[i];
    if (m < 0) {
      cost += costs.node_del;
      ++nops;
    } else {
      used[m] = true;
      if (a.node_labels[i] != b.node_labels[m]) {
        cost += costs.node_sub;
        ++nops;
      }
    }
  }
  for (std::size_t j = 0; j < b.size(); ++j)
    if (!used[j]) {
      cost += costs.node_ins;
      ++nops;
    }
  std::map<std::pair<int, int>, bool> matched;
  for (const auto& [uv, label] : a.edges) {
    const int fu = mapping[uv.first];
    const int fv = mapping[uv.second];
    auto it = (fu < 0 || fv < 0) ? b.edges.end() : b.edges.find({fu, fv});
    if (it == b.edges.end()) {
      cost += costs.edge_del;
      ++eops;
    } else {
      matched[it->first] = true;
      if (it->second != label) {
        cost += costs.edge_sub;
        ++eops;
      }
    }
  }
  for (const auto& [xy, label] : b.edges)
    if (!matched.count(xy)) {
      cost += costs.edge_ins;
      ++eops;
    }
  if (node_ops) *node_ops = nops;
  if (edge_ops) *edge_ops = eops;
  return cost;
}

namespace {

constexpr double kEps = 1e-9;
constexpr std::size_t kMaxExpansions = 300000;

// Lower bound on the cost of matching two label multisets of sizes m1/m2 where
// `common` labels can be paired for free.
double multiset_bound(std::size_t m1, std::size_t m2, std::size_t common, double del, double ins,
                      double sub) {
  const std::size_t lo = std::min(m1, m2);
  double bound = m1 > m2 ? static_cast<double>(m1 - m2) * del : static_cast<double>(m2 - m1) * ins;
  if (lo > common) bound += static_cast<double>(lo - common) * std::min(sub, del + ins);
  return bound;
}

std::size_t common_count(std::map<int, std::size_t> x, const std::map<int, std::size_t>& y) {
  std::size_t c = 0;
  for (const auto& [label, n] : x) {
    auto it = y.find(label);
    if (it != y.end()) c += std::min(n, it->second);
  }
  return c;
}

class Searcher {
 public:
  Searcher(const LabeledGraph& a, const LabeledGraph& b, const CostModel& costs)
      : a_(a), b_(b), c_(costs), n1_(a.size()), n2_(b.size()) {
    order_ = bfs_order(a_);
    pos_.assign(n1_, 0);
    for (std::size_t k = 0; k < n1_; ++k) pos_[order_[k]] = k;
  }

  // Bound on the whole problem before anything is assigned.
  double root_bound() const {
    std::vector<bool> used(n2_, false);
    return heuristic(0, used);
  }

  // Kind-aware greedy assignment: each a-node (in BFS order) takes the
  // cheapest unused b-node of its own kind; only when none is left does it
  // fall back to the cheapest of a different kind or deletion.
  std::vector<int> greedy() const {
    std::vector<int> mapping(n1_, -2);
    std::vector<bool> used(n2_, false);
    for (std::size_t k = 0; k < n1_; ++k) {
      const int u = order_[k];
      int best = -2;
      double best_cost = 0.0;
      for (int pass = 0; pass < 2 && best == -2; ++pass) {
        for (int j = pass == 0 ? 0 : -1; j < static_cast<int>(n2_); ++j) {
          if (j >= 0 && used[j]) continue;
          const bool same = j >= 0 && a_.node_labels[u] == b_.node_labels[j];
          if (pass == 0 && !same) continue;
          const double cost = step_cost(u, j, mapping);
          if (best == -2 || cost < best_cost - kEps) {
            best = j;
            best_cost = cost;
          }
        }
      }
      mapping[u] = best;
      if (best >= 0) used[best] = true;
    }
    return mapping;
  }

  // Returns the optimal mapping, or nullopt when the expansion cap is hit.
  std::optional<std::vector<int>> astar(const std::vector<int>& seed, double seed_cost) {
    struct State {
      double g;
      double f;
      std::size_t depth;
      std::vector<int> mapping;  // indexed by a-node; -2 = unassigned
      std::vector<bool> used;
    };
    auto cmp = [](const std::shared_ptr<State>& x, const std::shared_ptr<State>& y) {
      if (std::abs(x->f - y->f) > kEps) return x->f > y->f;
      return x->depth < y->depth;
    };
    std::priority_queue<std::shared_ptr<State>, std::vector<std::shared_ptr<State>>, decltype(cmp)>
        open(cmp);
    auto root = std::make_shared<State>();
    root->g = 0.0;
    root->depth = 0;
    root->mapping.assign(n1_, -2);
    root->used.assign(n2_, false);
    root->f = heuristic(0, root->used);
    double best_cost = seed_cost;
    std::vector<int> best = seed;
    if (root->f < best_cost - kEps) open.push(root);
    std::size_t expansions = 0;
    while (!open.empty()) {
      auto s = open.top();
      open.pop();
      if (s->f >= best_cost - kEps) break;
      if (++expansions > kMaxExpansions) return std::nullopt;
      const int u = order_[s->depth];
      for (int j = -1; j < static_cast<int>(n2_); ++j) {
        if (j >= 0 && s->used[j]) continue;
        auto t = std::make_shared<State>(*s);
        t->mapping[u] = j;
        if (j >= 0) t->used[j] = true;
        t->depth = s->depth + 1;
        t->g = s->g + step_cost(u, j, s->mapping);
        if (t->depth == n1_) {
          t->g += completion_cost(t->used);
          t->f = t->g;
          if (t->f < best_cost - kEps) {
            best_cost = t->f;
            best = t->mapping;
          }
          continue;
        }
        t->f = t->g + heuristic(t->depth, t->used);
        if (t->f < best_cost - kEps) open.push(t);
      }
    }
    return best;
  }

 private:
  const LabeledGraph& a_;
  const LabeledGraph& b_;
  const CostModel& c_;
  std::size_t n1_, n2_;
  std::vector<int> order_;
  std::vector<std::size_t> pos_;

  static std::vector<int> bfs_order(const LabeledGraph& g) {
    const std::size_t n = g.size();
    std::vector<std::vector<int>> adj(n);
    for (const auto& [uv, l] : g.edges) {
      adj[uv.first].push_back(uv.second);
      adj[uv.second].push_back(uv.first);
    }
    std::vector<int> order;
    std::vector<bool> seen(n, false);
    for (std::size_t s = 0; s < n; ++s) {
      if (seen[s]) continue;
      std::queue<int> q;
      q.push(static_cast<int>(s));
      seen[s] = true;
      while (!q.empty()) {
        int u = q.front();
        q.pop();
        order.push_back(u);
        for (int v : adj[u])
          if (!seen[v]) {
            seen[v] = true;
            q.push(v);
          }
      }
    }
    return order;
  }

  // Node cost of mapping a-node u to j (-1 = delete) plus the cost of every
  // edge between u and the already-assigned a-nodes (-2 = unassigned), on
  // both the a side and the b side.
  double step_cost(int u, int j, const std::vector<int>& mapping) const {
    double cost = 0.0;
    if (j < 0) cost += c_.node_del;
    else if (a_.node_labels[u] != b_.node_labels[j]) cost += c_.node_sub;
    auto consider = [&](int au, int av) {
      const int bu = au == u ? j : mapping[au];
      const int bv = av == u ? j : mapping[av];
      auto ea = a_.edges.find({au, av});
      auto eb = (bu < 0 || bv < 0) ? b_.edges.end() : b_.edges.find({bu, bv});
      const bool has_a = ea != a_.edges.end();
      const bool has_b = eb != b_.edges.end();
      if (has_a && has_b) {
        if (ea->second != eb->second) cost += c_.edge_sub;
      } else if (has_a) {
        cost += c_.edge_del;
      } else if (has_b) {
        cost += c_.edge_ins;
      }
    };
    for (std::size_t v = 0; v < n1_; ++v) {
      const int vi = static_cast<int>(v);
      if (vi == u || mapping[v] == -2) continue;
      consider(u, vi);
      consider(vi, u);
    }
    consider(u, u);
    return cost;
  }

  double completion_cost(const std::vector<bool>& used) const {
    double cost = 0.0;
    for (std::size_t j = 0; j < n2_; ++j)
      if (!used[j]) cost += c_.node_ins;
    for (const auto& [xy, l] : b_.edges)
      if (!used[xy.first] || !used[xy.second]) cost += c_.edge_ins;
    return cost;
  }

  double heuristic(std::size_t depth, const std::vector<bool>& used) const {
    std::map<int, std::size_t> l1, l2, e1, e2;
    std::size_t m1 = 0, m2 = 0, k1 = 0, k2 = 0;
    for (std::size_t k = depth; k < n1_; ++k) {
      ++l1[a_.node_labels[order_[k]]];
      ++m1;
    }
    for (std::size_t j = 0; j < n2_; ++j)
      if (!used[j]) {
        ++l2[b_.node_labels[j]];
        ++m2;
      }
    for (const auto& [uv, l] : a_.edges)
      if (pos_[uv.first] >= depth || pos_[uv.second] >= depth) {
        ++e1[l];
        ++k1;
      }
    for (const auto& [xy, l] : b_.edges)
      if (!used[xy.first] || !used[xy.second]) {
        ++e2[l];
        ++k2;
      }
    return multiset_bound(m1, m2, common_count(l1, l2), c_.node_del, c_.node_ins, c_.node_sub) +
           multiset_bound(k1, k2, common_count(e1, e2), c_.edge_del, c_.edge_ins, c_.edge_sub);
  }
};

GedResult finish(const LabeledGraph& a, const LabeledGraph& b, const CostModel& costs,
                 std::vector<int> mapping, bool exact, double lower) {
  GedResult r;
  r.distance = mapping_cost(a, b, mapping, costs, &r.node_ops, &r.edge_ops);
  r.exact = exact;
  r.upper_bound = r.distance;
  r.lower_bound = exact ? r.distance : std::min(lower, r.distance);
  r.mapping = std::move(mapping);
  return r;
}

}  // namespace

GedResult ged(const LabeledGraph& a, const LabeledGraph& b, std::size_t budget,
              const CostModel& costs) {
  costs.validate();
  Searcher search(a, b, costs);
  const double lower = search.root_bound();
  std::vector<int> greedy = search.greedy();
  const double greedy_cost = mapping_cost(a, b, greedy, costs);
  if (std::max(a.size(), b.size()) > budget) return finish(a, b, costs, greedy, false, lower);
  if (greedy_cost <= lower + kEps) return finish(a, b, costs, greedy, true, lower);
  auto exact = search.astar(greedy, greedy_cost);
  if (!exact) {
    spdlog::warn("ged: A* expansion cap reached ({} vs {} nodes), reporting bounds", a.size(),
                 b.size());
    return finish(a, b, costs, greedy, false, lower);
  }
  return finish(a, b, costs, *exact, true, lower);
}

GedResult ged(const Cfg& a, const Cfg& b, std::size_t budget, const CostModel& costs) {
  return ged(to_labeled(a), to_labeled(b), budget, costs);
}

AnnotateReport annotate_pairs(PairSet& pairs, std::size_t budget, const CostModel& costs,
                              unsigned workers) {
  costs.validate();
  if (workers == 0) workers = default_workers();
  std::vector<std::optional<std::string>> errors(pairs.pairs.size());
  parallel_for(pairs.pairs.size(), workers, [&](std::size_t i) {
    auto& p = pairs.pairs[i];
    p.ged.reset();
    p.ged_exact.reset();
    try {
      const auto r = ged(build_cfg(p.slow.source), build_cfg(p.fast.source), budget, costs);
      p.ged = r.distance;
      p.ged_exact = r.exact;
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  AnnotateReport report;
  for (std::size_t i = 0; i < pairs.pairs.size(); ++i) {
    if (errors[i]) report.failures.push_back({pairs.pairs[i].pair_id(), *errors[i]});
    else if (!pairs.pairs[i].ged_exact.value_or(true)) ++report.approximate;
  }
  pairs.provenance.push_back(
      {{"op", "annotate_pairs"},
       {"params",
        {{"budget", budget},
         {"costs",
          {{"node_ins", costs.node_ins}, {"node_del", costs.node_del}, {"node_sub", costs.node_sub},
           {"edge_ins", costs.edge_ins}, {"edge_del", costs.edge_del}, {"edge_sub", costs.edge_sub}}}}}});
  return report;
}

std::vector<HistogramRow> ged_histogram(const PairSet& user, const PairSet& problem,
                                        double bucket_width) {
  if (!(bucket_width > 0.0) || !std::isfinite(bucket_width))
    throw Error(ErrorKind::InvalidArgument, "bucket width must be positive");
  double max_ged = -1.0;
  for (const auto* set : {&user, &problem})
    for (const auto& p : set->pairs)
      if (p.ged) max_ged = std::max(max_ged, *p.ged);
  const std::size_t buckets =
      max_ged < 0 ? 0 : static_cast<std::size_t>(std::floor(max_ged / bucket_width)) + 1;
  std::vector<HistogramRow> rows(buckets + 1);
  for (std::size_t k = 0; k < buckets; ++k) {
    rows[k].lo = static_cast<double>(k) * bucket_width;
    rows[k].hi = static_cast<double>(k + 1) * bucket_width;
  }
  auto tally = [&](const PairSet& set, bool is_user) {
    for (const auto& p : set.pairs) {
      std::size_t k = buckets;
      if (p.ged) k = std::min(buckets - 1, static_cast<std::size_t>(std::floor(*p.ged / bucket_width)));
      (is_user ? rows[k].count_user : rows[k].count_problem)++;
    }
  };
  tally(user, true);
  tally(problem, false);
  return rows;
}

std::string histogram_csv(const std::vector<HistogramRow>& rows) {
  std::ostringstream os;
  os << "bucket_lo,bucket_hi,count_user,count_problem\n";
  for (const auto& r : rows) {
    if (r.lo) os << *r.lo << ',' << *r.hi;
    else os << "null,null";
    os << ',' << r.count_user << ',' << r.count_problem << '\n';
  }
  return os.str();
}

}  // namespace optbench
