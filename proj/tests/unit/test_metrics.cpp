#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "optbench/error.hpp"
#include "optbench/judge.hpp"
#include "optbench/metrics.hpp"

using namespace optbench;

TEST(Speedup, FloorAndRatio) {
  EXPECT_EQ(speedup(100, 50, true), 2.0);
  EXPECT_EQ(speedup(100, 200, true), 1.0);
  EXPECT_EQ(speedup(100, 10, false), 1.0);
  EXPECT_THROW(speedup(0, 1, true), Error);
  EXPECT_THROW(speedup(1, -1, true), Error);
}

TEST(Optimized, TenPercentBoundaryInclusive) {
  EXPECT_TRUE(is_optimized(110, 100, true));
  EXPECT_FALSE(is_optimized(109, 100, true));
  EXPECT_FALSE(is_optimized(110, 100, false));
  EXPECT_TRUE(is_optimized(1.1, 1.0, true));
  EXPECT_THROW(is_optimized(0, 1, true), Error);
}

TEST(BestOfK, FastestCorrectWithLowestIndexOnTies) {
  EvalRecord r{"p", {{false, 100, 1, FailureMode::SemanticFail}, {true, 100, 40, {}}, {true, 100, 30, {}}, {true, 100, 30, {}}}, {}};
  const auto b = best_of_k(r);
  ASSERT_TRUE(b.chosen);
  EXPECT_EQ(*b.chosen, 2u);
  EXPECT_DOUBLE_EQ(record_speedup(b), 100.0 / 30.0);
  EXPECT_TRUE(record_optimized(b));
  EvalRecord none{"q", {{false, 10, 1, FailureMode::CompileFail}}, {}};
  const auto n = best_of_k(none);
  EXPECT_FALSE(n.chosen);
  EXPECT_EQ(record_speedup(n), 1.0);
  EXPECT_FALSE(record_correct(n));
}

TEST(Summarize, HandComputed) {
  std::vector<EvalRecord> recs = {
      {"a", {{true, 100, 50, {}}}, {}},                          // 2.0, opt
      {"b", {{true, 100, 95, {}}}, {}},                          // 1.0526, not opt
      {"c", {{false, 100, 10, FailureMode::SemanticFail}}, {}},  // 1.0
      {"d", {}, {}},                                             // no candidates
  };
  const auto s = summarize(recs);
  EXPECT_EQ(s.n_records, 4u);
  EXPECT_DOUBLE_EQ(s.pct_opt, 0.25);
  EXPECT_DOUBLE_EQ(s.pct_correct, 0.5);
  EXPECT_NEAR(s.speedup_mean, (2.0 + 100.0 / 95.0 + 1.0 + 1.0) / 4.0, 1e-12);
  EXPECT_THROW(summarize({}), Error);
}

TEST(Summarize, RandomRecordsAgreeWithDirectFormula) {
  std::mt19937_64 g(1);
  for (int t = 0; t < 200; ++t) {
    std::vector<EvalRecord> recs(1 + g() % 20);
    double sp = 0;
    int opt = 0, cor = 0;
    for (auto& r : recs) {
      const double old_ms = 1 + static_cast<double>(g() % 1000);
      const int k = static_cast<int>(g() % 4);
      double best = -1;
      for (int i = 0; i < k; ++i) {
        CandidateOutcome c{g() % 2 == 0, old_ms, 1 + static_cast<double>(g() % 1000), {}};
        if (c.correct && (best < 0 || c.new_ms < best)) best = c.new_ms;
        r.candidates.push_back(c);
      }
      if (best > 0) {
        ++cor;
        sp += std::max(1.0, old_ms / best);
        opt += best * 11 <= old_ms * 10;
      } else {
        sp += 1.0;
      }
    }
    const auto s = summarize(recs);
    const double n = static_cast<double>(recs.size());
    EXPECT_NEAR(s.speedup_mean, sp / n, 1e-12);
    EXPECT_DOUBLE_EQ(s.pct_opt, opt / n);
    EXPECT_DOUBLE_EQ(s.pct_correct, cor / n);
    EXPECT_LE(s.pct_opt, s.pct_correct);
    EXPECT_GE(s.speedup_mean, 1.0);
  }
}

TEST(FailureModes, Classification) {
  ExecutionResult r;
  r.compile = CompileStatus::Error;
  EXPECT_EQ(classify_failure(r, "1\n"), FailureMode::CompileFail);
  r.compile = CompileStatus::Ok;
  r.run = RunStatus::RuntimeError;
  EXPECT_EQ(classify_failure(r, "1\n"), FailureMode::SemanticFail);
  r.run = RunStatus::Timeout;
  EXPECT_EQ(classify_failure(r, "1\n"), FailureMode::SemanticFail);
  r.run = RunStatus::Ok;
  r.stdout_text = "1\n\n";
  EXPECT_EQ(classify_failure(r, "1\n"), std::nullopt);
  r.stdout_text = "1.0000000000\n";
  EXPECT_EQ(classify_failure(r, "1\n"), FailureMode::FormatFail);
  r.stdout_text = "1   2\n";
  EXPECT_EQ(classify_failure(r, "1 2\n"), FailureMode::FormatFail);
  r.stdout_text = "2\n";
  EXPECT_EQ(classify_failure(r, "1\n"), FailureMode::SemanticFail);
}

TEST(Pearson, MatchesTwoPassFormula) {
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x(3 + g() % 20), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = u(g);
      y[i] = 0.5 * x[i] + u(g);
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
    }
    EXPECT_NEAR(pearson(x, y), sxy / std::sqrt(sxx * syy), 1e-12);
  }
  EXPECT_DOUBLE_EQ(pearson({1, 2, 3}, {2, 4, 6}), 1.0);
  EXPECT_DOUBLE_EQ(pearson({1, 2, 3}, {3, 2, 1}), -1.0);
  EXPECT_THROW(pearson({1, 2}, {1}), Error);
  EXPECT_THROW(pearson({1}, {1}), Error);
  EXPECT_THROW(pearson({1, 1, 1}, {1, 2, 3}), Error);
}

TEST(Judge, Policies) {
  EXPECT_TRUE(judge_output("3\n", "3", parse_output_policy("exact")));
  EXPECT_FALSE(judge_output("3 \n", "3", parse_output_policy("exact")));
  EXPECT_TRUE(judge_output("1  2\n3", "1 2 3\n", parse_output_policy("token")));
  EXPECT_FALSE(judge_output("1.0", "1", parse_output_policy("token")));
  EXPECT_TRUE(judge_output("1.0000001", "1", parse_output_policy("numeric:1e-6")));
  EXPECT_FALSE(judge_output("1.01", "1", parse_output_policy("numeric:1e-6")));
  EXPECT_FALSE(judge_output("yes", "no", parse_output_policy("numeric")));
  EXPECT_EQ(to_string(parse_output_policy("numeric:0.001")).substr(0, 7), "numeric");
  EXPECT_THROW(parse_output_policy("fuzzy"), Error);
}

// Speedup columns of the hardware validation table; numpy.corrcoef gives 0.986578...
TEST(Pearson, HardwareTableValue) {
  const std::vector<double> sim = {8.5, 12.2, 1.8, 5.1, 3.3, 15.4, 2.1};
  const std::vector<double> hw = {7.1, 10.3, 1.5, 6.2, 2.8, 12.8, 1.9};
  EXPECT_NEAR(pearson(sim, hw), 0.98658, 5e-5);
}
