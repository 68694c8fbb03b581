#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "weakiv/conditional.hpp"
#include "weakiv/errors.hpp"
#include "weakiv/special.hpp"
#include "weakiv/statistics.hpp"

using namespace weakiv;
using weakiv::testing::random_config;
using weakiv::testing::random_vector;

namespace {

Model identity_model(int k) {
  ModelConfig c;
  c.k = k;
  c.beta0 = 0.0;
  c.sigma = Matrix::Identity(2 * k, 2 * k);
  return make_model(c);
}

double naive_quantile(std::vector<double> x, double alpha) {
  const int m = quantile_rank(alpha, static_cast<int>(x.size()));
  std::sort(x.begin(), x.end());
  return x[m - 1];
}

}  // namespace

TEST(ClcStat, ConvexCombination) {
  EXPECT_EQ(clc_stat(4.0, 1.0, 1.0), 4.0);
  EXPECT_EQ(clc_stat(4.0, 1.0, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(clc_stat(4.0, 1.0, 0.25), 1.75);
  for (double w : {-0.1, 1.1, std::nan("")}) {
    try {
      clc_stat(4.0, 1.0, w);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidWeight);
    }
  }
}

TEST(TestKindNames, RoundTrip) {
  for (TestKind k : kAllTests) EXPECT_EQ(parse_test_kind(to_string(k)), k);
  EXPECT_EQ(parse_test_kind("cqlr2"), TestKind::CQLR2);
  EXPECT_THROW(parse_test_kind("wald"), Error);
}

TEST(QuantileRank, UpperOrderStatistic) {
  EXPECT_EQ(quantile_rank(0.05, 10000), 9500);
  EXPECT_EQ(quantile_rank(0.01, 10000), 9900);
  EXPECT_EQ(quantile_rank(0.05, 1001), 951);
}

TEST(ConditionalCriticalValue, ArMatchesChi2Quantile) {
  std::mt19937_64 rng(30);
  const Model m = make_model(random_config(3, 0.5, rng));
  const double cv = conditional_critical_value(TestKind::AR, random_vector(3, rng), m, 0.05, 100000, 1);
  EXPECT_NEAR(cv, chi2_quantile(0.95, 3), 0.1);
}

TEST(ConditionalCriticalValue, ClrRankOneIsChi2One) {
  std::mt19937_64 rng(31);
  const Model m = make_model(random_config(1, -0.3, rng));
  const double cv = conditional_critical_value(TestKind::CLR, random_vector(1, rng, 3.0), m, 0.05, 100000, 2);
  EXPECT_NEAR(cv, chi2_quantile(0.95, 1), 0.1);
}

TEST(ConditionalCriticalValue, ClrBelowChi2kQuantile) {
  std::mt19937_64 rng(32);
  const Model m = make_model(random_config(4, 0.0, rng));
  for (int rep = 0; rep < 10; ++rep) {
    const Vector t = random_vector(4, rng, rep);
    EXPECT_LE(conditional_critical_value(TestKind::CLR, t, m, 0.05, 10000, rep), 9.49 + 0.15);
  }
}

TEST(ConditionalCriticalValue, PrunedQuantileIsExact) {
  std::mt19937_64 rng(33);
  for (int k : {2, 3}) {
    const Model m = make_model(random_config(k, 0.7, rng, 8.0));
    const QProfile profile(m.config);
    const ConditionalKernel kernel(m, profile);
    for (double scale : {0.3, 2.0, 8.0}) {
      const ConditionalLaw law(kernel, TestKind::CLR, random_vector(k, rng, scale));
      const std::uint64_t key = conditional_key(5, TestKind::CLR);
      const std::vector<double> draws = conditional_draws(law, 3000, key);
      for (double alpha : {0.01, 0.05, 0.1}) {
        EXPECT_EQ(conditional_quantile(law, alpha, 3000, key), naive_quantile(draws, alpha));
      }
    }
  }
}

TEST(ConditionalCriticalValue, BoundsBracketStatistic) {
  std::mt19937_64 rng(34);
  const Model m = make_model(random_config(3, -1.0, rng, 8.0));
  const QProfile profile(m.config);
  const ConditionalKernel kernel(m, profile);
  const ConditionalLaw law(kernel, TestKind::CLR, random_vector(3, rng, 2.0));
  ConditionalLaw::Workspace ws(3);
  for (int rep = 0; rep < 2000; ++rep) {
    const Vector s = random_vector(3, rng);
    const auto [lo, hi] = law.bounds(s, ws);
    const double x = law.statistic(s, ws);
    EXPECT_LE(lo, x);
    EXPECT_GE(hi, x);
  }
}

TEST(ConditionalDecisions, MatchFullComparison) {
  std::mt19937_64 rng(35);
  const std::vector<double> alphas = {0.01, 0.05, 0.1};
  for (TestKind kind : {TestKind::CLR, TestKind::CQLR1, TestKind::CQLR2, TestKind::LM}) {
    const Model m = make_model(random_config(3, 0.2, rng, 6.0));
    const QProfile profile(m.config);
    const ConditionalKernel kernel(m, profile);
    for (int rep = 0; rep < 4; ++rep) {
      const ConditionalLaw law(kernel, kind, random_vector(3, rng, 1.0 + rep));
      const std::uint64_t key = conditional_key(77, kind, rep);
      const std::vector<double> draws = conditional_draws(law, 2000, key);
      for (double observed : {0.0, 0.5, 3.0, 6.0, 9.0, 12.0, 20.0}) {
        const std::vector<bool> got = conditional_decisions(law, observed, alphas, 2000, key);
        for (std::size_t a = 0; a < alphas.size(); ++a) {
          EXPECT_EQ(got[a], observed > naive_quantile(draws, alphas[a])) << to_string(kind) << " " << observed;
        }
      }
    }
  }
}

TEST(ConditionalCriticalValue, NonincreasingInAlpha) {
  std::mt19937_64 rng(36);
  const Model m = make_model(random_config(2, 0.0, rng));
  for (TestKind kind : {TestKind::CLR, TestKind::CQLR1, TestKind::CQLR2}) {
    const Vector t = random_vector(2, rng, 2.0);
    const double c01 = conditional_critical_value(kind, t, m, 0.01, 10000, 9);
    const double c05 = conditional_critical_value(kind, t, m, 0.05, 10000, 9);
    const double c10 = conditional_critical_value(kind, t, m, 0.10, 10000, 9);
    EXPECT_GE(c01, c05);
    EXPECT_GE(c05, c10);
  }
}

TEST(ConditionalCriticalValue, Errors) {
  const Model m = identity_model(2);
  try {
    conditional_critical_value(TestKind::CLR, Vector::Ones(2), m, 0.05, 999, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientDraws);
  }
  try {
    conditional_critical_value(TestKind::CLR, Vector::Ones(2), m, 0.6, 10000, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
  try {
    conditional_critical_value(TestKind::CQLR1, Vector::Zero(2), m, 0.05, 1000, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateDirection);
  }
}

TEST(RunTest, ZeroDataRejectsNothing) {
  std::mt19937_64 rng(37);
  const Model m = make_model(random_config(3, 0.4, rng));
  McOptions opt;
  opt.n_draws = 2000;
  opt.clc_weight = [](const Vector&) { return 0.5; };
  for (TestKind kind : kAllTests) {
    const TestOutcome o = run_test(kind, Vector::Zero(6), m, 0.05, opt);
    EXPECT_FALSE(o.reject) << to_string(kind);
    EXPECT_EQ(o.statistic, 0.0);
    EXPECT_EQ(o.degenerate, kind != TestKind::AR && kind != TestKind::CLR);
  }
}

TEST(RunTest, ExactCriticalValues) {
  std::mt19937_64 rng(38);
  const Model m = make_model(random_config(4, 0.0, rng));
  const Vector r = random_vector(8, rng, 2.0);
  const TestOutcome ar = run_test(TestKind::AR, r, m, 0.05);
  EXPECT_EQ(ar.critical_value, chi2_quantile(0.95, 4));
  EXPECT_EQ(ar.reject, ar.statistic > ar.critical_value);
  EXPECT_EQ(ar.n_cond_draws, 0);
  const TestOutcome lm = run_test(TestKind::LM, r, m, 0.01);
  EXPECT_EQ(lm.critical_value, chi2_quantile(0.99, 1));
}

TEST(RunTest, ClrEqualsArAtRankOne) {
  std::mt19937_64 rng(39);
  const Model m = make_model(random_config(1, 0.8, rng));
  int rejections = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const Vector r = random_vector(2, rng, 2.5);
    const TestOutcome a = run_test(TestKind::AR, r, m, 0.05);
    const TestOutcome c = run_test(TestKind::CLR, r, m, 0.05);
    EXPECT_EQ(a.reject, c.reject);
    EXPECT_NEAR(a.statistic, c.statistic, 1e-12 * (1.0 + a.statistic));
    rejections += a.reject;
  }
  EXPECT_GT(rejections, 0);
}

TEST(RunTest, ArNullRejectionRate) {
  std::mt19937_64 rng(40);
  const Model m = make_model(random_config(3, 0.3, rng));
  Vector mu(3);
  mu << 1.0, 0.5, -2.0;
  const int n = 100000;
  const auto draws = sample_vec_r(make_design_point(mu, 0.0, m.blocks), m.config, 3, n);
  int rejects = 0;
  for (const Vector& r : draws) rejects += run_test(TestKind::AR, r, m, 0.05).reject;
  const double rate = double(rejects) / n;
  EXPECT_GE(rate, 0.045);
  EXPECT_LE(rate, 0.055);
}

TEST(RunTest, DeterministicGivenSeed) {
  std::mt19937_64 rng(41);
  const Model m = make_model(random_config(2, -0.2, rng));
  const Vector r = random_vector(4, rng, 2.0);
  McOptions opt;
  opt.n_draws = 5000;
  opt.seed = 123;
  for (TestKind kind : {TestKind::CLR, TestKind::CQLR1, TestKind::CQLR2}) {
    const TestOutcome a = run_test(kind, r, m, 0.05, opt);
    const TestOutcome b = run_test(kind, r, m, 0.05, opt);
    EXPECT_EQ(a.critical_value, b.critical_value);
    EXPECT_EQ(a.statistic, b.statistic);
    EXPECT_EQ(a.n_cond_draws, 5000);
    opt.seed = 124;
    EXPECT_NE(run_test(kind, r, m, 0.05, opt).critical_value, a.critical_value);
    opt.seed = 123;
  }
}

TEST(RunTest, ClcEndpointsMatchArAndLmStatistics) {
  std::mt19937_64 rng(42);
  const Model m = make_model(random_config(2, 0.0, rng));
  const Vector r = random_vector(4, rng, 2.0);
  McOptions opt;
  opt.n_draws = 2000;
  opt.clc_weight = [](const Vector&) { return 1.0; };
  EXPECT_NEAR(run_test(TestKind::CLC, r, m, 0.05, opt).statistic, run_test(TestKind::AR, r, m, 0.05).statistic, 1e-14);
  opt.clc_weight = [](const Vector&) { return 0.0; };
  EXPECT_NEAR(run_test(TestKind::CLC, r, m, 0.05, opt).statistic, run_test(TestKind::LM, r, m, 0.05).statistic, 1e-14);
  opt.clc_weight = [](const Vector&) { return 2.0; };
  EXPECT_THROW(run_test(TestKind::CLC, r, m, 0.05, opt), Error);
}
