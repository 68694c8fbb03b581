#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "weakiv/errors.hpp"
#include "weakiv/q_profile.hpp"
#include "weakiv/statistics.hpp"

using namespace weakiv;
using weakiv::testing::dense_q;
using weakiv::testing::grid_min_q;
using weakiv::testing::random_config;
using weakiv::testing::random_vector;

namespace {

ModelConfig identity_config(int k, double beta0) {
  ModelConfig c;
  c.k = k;
  c.beta0 = beta0;
  c.sigma = Matrix::Identity(2 * k, 2 * k);
  return c;
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST(ArStat, Values) {
  EXPECT_EQ(ar_stat(Vector::Zero(3)), 0.0);
  EXPECT_EQ(ar_stat(Vector::Unit(3, 1)), 1.0);
  EXPECT_EQ(ar_stat(vec({3.0, 4.0})), 25.0);
}

TEST(LmStats, ScalarReduction) {
  const RotatedBlocks b = build_blocks(identity_config(1, 0.0));
  const LmPair pos = lm_stats({vec({1.7}), vec({0.4})}, b);
  EXPECT_NEAR(pos.lm1, 1.7, 1e-15);
  EXPECT_NEAR(pos.lm, 1.7 * 1.7, 1e-14);
  const LmPair neg = lm_stats({vec({1.7}), vec({-2.0})}, b);
  EXPECT_NEAR(neg.lm1, -1.7, 1e-15);
}

TEST(LmStats, OrthogonalScoreIsZero) {
  const RotatedBlocks b = build_blocks(identity_config(2, 0.0));
  const LmPair p = lm_stats({vec({0.0, 3.0}), vec({1.0, 0.0})}, b);
  EXPECT_EQ(p.lm1, 0.0);
  EXPECT_EQ(p.lm, 0.0);
}

TEST(LmStats, MatchesQuadraticFormOracle) {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 20; ++rep) {
    const ModelConfig c = random_config(3, rep * 0.3 - 3.0, rng);
    const RotatedBlocks b = build_blocks(c);
    const Vector s = random_vector(3, rng);
    const Vector t = random_vector(3, rng, 4.0);
    const Matrix root = sym_inv_sqrt(b.sigma_up22);
    const double num = s.dot(sym_inv_sqrt(b.sigma11) * root * t);
    const double den = t.dot(root * b.sigma11.inverse() * root * t);
    const LmPair p = lm_stats({s, t}, b);
    EXPECT_NEAR(p.lm, num * num / den, 1e-10 * (1.0 + p.lm));
    EXPECT_NEAR(p.lm, p.lm1 * p.lm1, 1e-10 * (1.0 + p.lm));
    EXPECT_LE(p.lm, ar_stat(s) * (1 + 1e-12));
  }
}

TEST(LmStats, DegenerateDirectionThrows) {
  const RotatedBlocks b = build_blocks(identity_config(2, 0.0));
  try {
    lm_stats({vec({1.0, 1.0}), Vector::Zero(2)}, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateDirection);
  }
}

TEST(RankStats, Values) {
  std::mt19937_64 rng(11);
  const RotatedBlocks id = build_blocks(identity_config(2, 0.0));
  const RankPair zero = rank_stats(Vector::Zero(2), id);
  EXPECT_EQ(zero.r1, 0.0);
  EXPECT_EQ(zero.r2, 0.0);
  const Vector t = random_vector(2, rng);
  const RankPair same = rank_stats(t, id);
  EXPECT_NEAR(same.r1, same.r2, 1e-14);

  const ModelConfig c = random_config(2, 0.9, rng);
  const RotatedBlocks b = build_blocks(c);
  const Matrix root = sym_inv_sqrt(b.sigma_up22);
  const RankPair r = rank_stats(t, b);
  EXPECT_NEAR(r.r1, t.squaredNorm(), 1e-14);
  EXPECT_NEAR(r.r2, t.dot(root * b.sigma11.inverse() * root * t), 1e-10 * r.r2);
}

TEST(QlrStat, AlgebraicIdentities) {
  EXPECT_NEAR(qlr_stat(3.0, 3.0, 7.0), 3.0, 1e-14);
  EXPECT_NEAR(qlr_stat(3.0, 3.0, 0.5), 3.0, 1e-14);
  EXPECT_EQ(qlr_stat(0.0, 0.0, 5.0), 0.0);
  EXPECT_NEAR(qlr_stat(5.0, 2.0, 1e8), 2.0, 1e-6);
  EXPECT_NEAR(qlr_stat(5.0, 2.0, 0.0), 5.0, 1e-15);
  try {
    qlr_stat(1.0, 1.1, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}

TEST(QlrStat, BoundsOnRandomTriples) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 10000; ++rep) {
    const double ar = 30.0 * u(rng);
    const double lm = ar * u(rng);
    const double r = 60.0 * u(rng);
    const double q = qlr_stat(ar, lm, r);
    EXPECT_GE(q, lm - 1e-12);
    EXPECT_LE(q, ar + 1e-12);
    if (r > ar) EXPECT_LE(q, lm * r / (r - ar) * (1 + 1e-12) + 1e-12);
    EXPECT_LE(qlr_stat(ar, lm, 2.0 * r + 1.0), q + 1e-12);
  }
}

TEST(QBeta, NullValueGivesAr) {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    const Model m = make_model(random_config(3, rep - 4.0, rng));
    const Vector r = random_vector(6, rng, 2.0);
    const double ar = ar_stat(apply(m.map, r).s);
    EXPECT_NEAR(q_beta(r, m.config, m.config.beta0), ar, 1e-10 * (1.0 + ar));
    EXPECT_EQ(q_beta(Vector::Zero(6), m.config, 0.3), 0.0);
  }
}

TEST(QBeta, MatchesDenseAndIsScaleInvariant) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const ModelConfig c = random_config(3, 0.5, rng);
  const Vector r = random_vector(6, rng);
  for (int rep = 0; rep < 100; ++rep) {
    const double beta = u(rng);
    const double scale = u(rng);
    if (std::abs(scale) < 1e-3) continue;
    const double q = q_beta(r, c, beta);
    EXPECT_NEAR(q, dense_q(r, c, 1.0, -beta), 1e-10 * (1.0 + q));
    EXPECT_NEAR(q_direction(r, c, scale, -scale * beta), q, 1e-10 * (1.0 + q));
  }
  EXPECT_NEAR(q_beta(r, c, INFINITY), dense_q(r, c, 0.0, -1.0), 1e-10);
}

TEST(QBeta, RankOneVanishesOrthogonally) {
  std::mt19937_64 rng(15);
  const ModelConfig c = random_config(1, 0.0, rng);
  const Vector r = vec({1.3, -0.6});
  EXPECT_LT(q_direction(r, c, 0.6, 1.3), 1e-28);
}

TEST(QProfile, DerivativesMatchFiniteDifferences) {
  std::mt19937_64 rng(16);
  const ModelConfig c = random_config(3, 0.2, rng);
  const QProfile profile(c);
  QProfile::Workspace ws(3);
  const Vector r = random_vector(6, rng, 3.0);
  for (double th : {0.1, 0.9, 1.5707963, 2.4, 3.0}) {
    const auto d = profile.derivatives(th, r, ws);
    const double h = 1e-5;
    const double qp = profile.evaluate(th + h, r);
    const double qm = profile.evaluate(th - h, r);
    EXPECT_NEAR(d.q, profile.evaluate(th, r), 1e-12 * (1.0 + d.q));
    EXPECT_NEAR(d.dq, (qp - qm) / (2 * h), 1e-6 * (1.0 + std::abs(d.dq)));
    EXPECT_NEAR(d.d2q, (qp - 2 * d.q + qm) / (h * h), 1e-3 * (1.0 + std::abs(d.d2q)));
  }
}

TEST(MinimizeQ, RankOneIsZero) {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const ModelConfig c = random_config(1, rep * 0.5, rng);
    const Vector r = random_vector(2, rng);
    const QMinimum m = minimize_q(r, c);
    EXPECT_EQ(m.q_min, 0.0);
    EXPECT_NEAR(m.beta_min, r(0) / r(1), 1e-12 * (1.0 + std::abs(m.beta_min)));
    EXPECT_LT(q_beta(r, c, m.beta_min), 1e-20 + 1e-12 * r.squaredNorm());
    EXPECT_LT(grid_min_q(r, c, 4096), 1e-3 * r.squaredNorm());
    EXPECT_NEAR(lr_stat(r, c), ar_stat(compute_st(r, c, build_blocks(c)).s), 1e-12);
  }
  const ModelConfig c = random_config(1, 0.0, rng);
  EXPECT_EQ(minimize_q(vec({1.0, 0.0}), c).beta_min, std::numeric_limits<double>::infinity());
}

TEST(MinimizeQ, ZeroData) {
  std::mt19937_64 rng(18);
  const ModelConfig c = random_config(3, 0.0, rng);
  const QMinimum m = minimize_q(Vector::Zero(6), c);
  EXPECT_EQ(m.q_min, 0.0);
  EXPECT_EQ(lr_stat(Vector::Zero(6), c), 0.0);
}

TEST(MinimizeQ, MatchesFineGridOracle) {
  std::mt19937_64 rng(19);
  for (int rep = 0; rep < 6; ++rep) {
    const ModelConfig c = random_config(3, rep - 2.5, rng, 20.0);
    Vector r = random_vector(6, rng, 1.0);
    r.head(3) += (rep + 1.0) * random_vector(3, rng);  // some identification
    const QMinimum m = minimize_q(r, c);
    const double oracle = grid_min_q(r, c, 100000);
    EXPECT_LE(m.q_min, oracle + 1e-9 * (1.0 + oracle));
    EXPECT_NEAR(m.q_min, oracle, 1e-6 * (1.0 + oracle));
    EXPECT_NEAR(q_beta(r, c, m.beta_min), m.q_min, 1e-9 * (1.0 + m.q_min));
  }
}

TEST(MinimizeQ, BelowVerificationGrid) {
  std::mt19937_64 rng(20);
  for (int rep = 0; rep < 30; ++rep) {
    const ModelConfig c = random_config(2 + rep % 3, rep * 0.2 - 3.0, rng, 10.0);
    const Vector r = random_vector(2 * c.k, rng, 2.0);
    const QMinimum m = minimize_q(r, c);
    const double slack = 1e-9 * (1.0 + m.q_min);
    for (int j = 0; j < 512; ++j) {
      const double th = M_PI * (j + 0.5) / 512;
      EXPECT_LE(m.q_min, q_direction(r, c, std::cos(th), -std::sin(th)) + slack);
    }
    for (double beta : {c.beta0, 1e6, -1e6}) EXPECT_LE(m.q_min, q_beta(r, c, beta) + slack);
  }
}

TEST(MinimizeQ, InfiniteEndpointReported) {
  // r2 = 0 puts the exact minimizer at b = (0, -1), i.e. beta = infinity.
  ModelConfig c;
  c.k = 2;
  c.beta0 = 0.0;
  c.sigma = Matrix::Identity(4, 4);
  const QMinimum m = minimize_q(vec({1.0, 2.0, 0.0, 0.0}), c);
  EXPECT_NEAR(m.q_min, 0.0, 1e-20);
  EXPECT_EQ(m.beta_min, std::numeric_limits<double>::infinity());
}

TEST(LrStat, RangeAndOracle) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 200; ++rep) {
    const Model m = make_model(random_config(2, rep * 0.05 - 5.0, rng));
    const Vector r = random_vector(4, rng, 2.0);
    const double lr = lr_stat(r, m.config);
    const double ar = ar_stat(apply(m.map, r).s);
    EXPECT_GE(lr, 0.0);
    EXPECT_LE(lr, ar + 1e-12);
    const double beta_star = rep * 0.1 - 10.0;
    EXPECT_GE(lr, ar - q_beta(r, m.config, beta_star) - 1e-9);
  }
  const Model m = make_model(random_config(2, 0.4, rng));
  const Vector r = random_vector(4, rng, 2.0);
  const double oracle = q_beta(r, m.config, 0.4) - grid_min_q(r, m.config, 100000);
  EXPECT_NEAR(lr_stat(r, m.config), oracle, 1e-6);
}

TEST(LrStat, ZeroWhenNullIsMinimizer) {
  // With Sigma = I and beta0 = 0, Q(0) = r1'r1 and choosing r1 = 0 makes it 0.
  ModelConfig c;
  c.k = 2;
  c.beta0 = 0.0;
  c.sigma = Matrix::Identity(4, 4);
  EXPECT_EQ(lr_stat(vec({0.0, 0.0, 1.0, -1.0}), c), 0.0);
}

TEST(StatBundle, Invariants) {
  std::mt19937_64 rng(22);
  std::vector<Model> models;
  for (int k = 1; k <= 4; ++k) models.push_back(make_model(random_config(k, 0.3 * k, rng)));
  for (int rep = 0; rep < 10000; ++rep) {
    const int k = 1 + rep % 4;
    const Model& m = models[k - 1];
    const Vector r = random_vector(2 * k, rng, 1.5);
    const StatPair p = apply(m.map, r);
    const LmPair lm = lm_stats(p, m.blocks);
    EXPECT_NEAR(lm.lm, lm.lm1 * lm.lm1, 1e-10 * (1.0 + lm.lm));
    EXPECT_LE(lm.lm, ar_stat(p.s) * (1.0 + 1e-12));
  }
  const Model m = make_model(random_config(3, -0.5, rng));
  const QProfile profile(m.config);
  const Vector r = random_vector(6, rng, 2.0);
  const StatBundle b = compute_statistics(r, m, profile);
  EXPECT_NEAR(b.lm, b.lm1 * b.lm1, 1e-10 * (1.0 + b.lm));
  EXPECT_LE(b.lm, b.ar);
  EXPECT_LE(b.lr, b.ar);
  EXPECT_GE(b.lr, 0.0);
  EXPECT_NEAR(b.lr, lr_stat(r, m.config), 1e-9);
  EXPECT_NEAR(b.qlr1, qlr_stat(b.ar, b.lm, b.r1), 1e-12);
}
