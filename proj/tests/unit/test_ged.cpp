#include <gtest/gtest.h>

#include "ged_oracle.hpp"
#include "optbench/cfg.hpp"
#include "optbench/error.hpp"
#include "optbench/ged.hpp"
#include "optbench/pairing.hpp"
#include "support.hpp"

using namespace optbench;
using testsupport::brute_force_ged;
using testsupport::random_graph;

TEST(Ged, MatchesExhaustiveSearchOnSmallGraphs) {
  std::mt19937_64 g(2024);
  for (int t = 0; t < 150; ++t) {
    const auto a = random_graph(g, 4);
    const auto b = random_graph(g, 4);
    const auto r = ged(a, b);
    EXPECT_TRUE(r.exact);
    EXPECT_NEAR(r.distance, brute_force_ged(a, b), 1e-9) << "trial " << t;
    EXPECT_NEAR(mapping_cost(a, b, r.mapping, {}), r.distance, 1e-9);
    EXPECT_LE(r.lower_bound, r.distance + 1e-9);
    EXPECT_GE(r.upper_bound, r.distance - 1e-9);
  }
}

TEST(Ged, NonUniformCosts) {
  std::mt19937_64 g(99);
  CostModel c{2.0, 1.5, 0.5, 0.75, 1.25, 0.3};
  for (int t = 0; t < 60; ++t) {
    const auto a = random_graph(g, 4);
    const auto b = random_graph(g, 4);
    EXPECT_NEAR(ged(a, b, kDefaultGedBudget, c).distance, brute_force_ged(a, b, c), 1e-9) << "trial " << t;
  }
}

TEST(Ged, IdentityAndSymmetry) {
  std::mt19937_64 g(7);
  for (int t = 0; t < 40; ++t) {
    const auto a = random_graph(g, 5);
    const auto b = random_graph(g, 5);
    EXPECT_EQ(ged(a, a).distance, 0.0);
    EXPECT_NEAR(ged(a, b).distance, ged(b, a).distance, 1e-9);
  }
}

TEST(Ged, SplicedNodeBeforeExit) {
  // entry -> s -> exit  versus  entry -> s -> s' -> exit; labels 0 entry, 1 exit, 2 straight
  LabeledGraph p, q;
  p.node_labels = {0, 2, 1};
  p.add_edge(0, 1, 0);
  p.add_edge(1, 2, 0);
  q.node_labels = {0, 2, 2, 1};
  q.add_edge(0, 1, 0);
  q.add_edge(1, 2, 0);
  q.add_edge(2, 3, 0);
  EXPECT_EQ(brute_force_ged(p, q), 3.0);
  EXPECT_EQ(ged(p, q).distance, 3.0);
  // Splicing a node with the same label as its successor costs one node and
  // one edge insertion.
  LabeledGraph r = p, s;
  r.node_labels = {0, 2, 2};
  s.node_labels = {0, 2, 2, 2};
  s.add_edge(0, 1, 0);
  s.add_edge(1, 2, 0);
  s.add_edge(2, 3, 0);
  EXPECT_EQ(brute_force_ged(r, s), 2.0);
  EXPECT_EQ(ged(r, s).distance, 2.0);
}

TEST(Ged, EmptyGraphs) {
  LabeledGraph e, one;
  one.node_labels = {1};
  one.add_edge(0, 0, 0);
  EXPECT_EQ(ged(e, e).distance, 0.0);
  EXPECT_EQ(ged(e, one).distance, 2.0);
  EXPECT_EQ(ged(one, e).distance, 2.0);
}

TEST(Ged, OverBudgetIsApproximateAndBracketed) {
  std::mt19937_64 g(11);
  LabeledGraph a = random_graph(g, 5), b = random_graph(g, 5);
  while (a.size() < 4 || b.size() < 4) {
    a = random_graph(g, 5);
    b = random_graph(g, 5);
  }
  const auto exact = ged(a, b);
  const auto approx = ged(a, b, 2);
  EXPECT_FALSE(approx.exact);
  EXPECT_EQ(approx.distance, approx.upper_bound);
  EXPECT_LE(approx.lower_bound, exact.distance + 1e-9);
  EXPECT_GE(approx.upper_bound, exact.distance - 1e-9);
  EXPECT_NEAR(mapping_cost(a, b, approx.mapping, {}), approx.distance, 1e-9);
}

TEST(Ged, InvalidCostModel) {
  LabeledGraph a;
  CostModel c;
  c.edge_ins = 0.0;
  EXPECT_THROW(ged(a, a, kDefaultGedBudget, c), Error);
  c.edge_ins = -1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Ged, AnnotatePairsAndHistogram) {
  const auto corpus = ingest(testsupport::fixture("contrast/corpus.jsonl"), ArchiveFormat::Jsonl).corpus;
  PairSet user = build_user_oriented(corpus);
  PairSet prob = build_problem_oriented(corpus);
  user.pairs.push_back(user.pairs.front());
  user.pairs.back().slow.source = "int main() { {";
  const auto ru = annotate_pairs(user, 5);
  const auto rp = annotate_pairs(prob);
  ASSERT_EQ(ru.failures.size(), 1u);
  EXPECT_NE(ru.failures[0].reason.find("UnbalancedBraces"), std::string::npos);
  EXPECT_GT(ru.approximate, 0u);
  EXPECT_FALSE(user.pairs.back().ged.has_value());
  for (const auto& p : prob.pairs) EXPECT_TRUE(p.ged.has_value());
  const auto rows = ged_histogram(user, prob, 2.0);
  ASSERT_FALSE(rows.empty());
  EXPECT_FALSE(rows.back().lo.has_value());
  EXPECT_EQ(rows.back().count_user, 1u);
  std::size_t nu = 0, np = 0;
  for (const auto& r : rows) {
    nu += r.count_user;
    np += r.count_problem;
    if (r.lo) EXPECT_DOUBLE_EQ(*r.hi - *r.lo, 2.0);
  }
  EXPECT_EQ(nu, user.pairs.size());
  EXPECT_EQ(np, prob.pairs.size());
  const auto csv = histogram_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "bucket_lo,bucket_hi,count_user,count_problem");
  EXPECT_THROW(ged_histogram(user, prob, 0.0), Error);
}
