#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "weakiv/errors.hpp"
#include "weakiv/power.hpp"

using namespace weakiv;
using weakiv::testing::random_config;

namespace {

PowerRequest small_request(std::uint64_t seed = 5) {
  std::mt19937_64 rng(80);
  PowerRequest req;
  req.config = random_config(2, 0.3, rng);
  req.mu = Vector::Zero(2);
  req.mu(0) = 3.0;
  req.delta_grid = {0.0, 1.0, 4.0};
  req.tests = {TestKind::AR, TestKind::LM, TestKind::CLR, TestKind::CQLR1};
  req.n_outer = 1000;
  req.n_cond = 1000;
  req.seed = seed;
  req.threads = 2;
  return req;
}

}  // namespace

TEST(PowerValidate, RejectsMalformedRequests) {
  const PowerRequest good = small_request();
  EXPECT_NO_THROW(validate(good));
  auto expect_kind = [](PowerRequest req, ErrorKind kind) {
    try {
      validate(req);
      ADD_FAILURE() << "no throw";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), kind);
    }
  };
  PowerRequest r = good;
  r.n_outer = 999;
  expect_kind(r, ErrorKind::InsufficientDraws);
  r = good;
  r.n_cond = 10;
  expect_kind(r, ErrorKind::InsufficientDraws);
  r = good;
  r.alpha = 1.0;
  expect_kind(r, ErrorKind::InvalidInput);
  r = good;
  r.delta_grid.clear();
  expect_kind(r, ErrorKind::InvalidInput);
  r = good;
  r.tests.clear();
  expect_kind(r, ErrorKind::InvalidInput);
  r = good;
  r.tests = {TestKind::CLC};
  expect_kind(r, ErrorKind::InvalidWeight);
  r = good;
  r.mu = Vector::Zero(3);
  expect_kind(r, ErrorKind::DimensionMismatch);
}

TEST(PowerCurve, RowLayoutAndStandardErrors) {
  const PowerRequest req = small_request();
  const PowerTable t = power_curve(req);
  ASSERT_EQ(t.rows.size(), 12u);
  const RotatedBlocks b = build_blocks(req.config);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const PowerRow& row = t.rows[i];
    EXPECT_EQ(row.test, req.tests[i / 3]);
    EXPECT_EQ(row.delta, req.delta_grid[i % 3]);
    EXPECT_NEAR(row.d, row.delta * row.delta * req.mu.dot(b.sigma11_inv * req.mu), 1e-10);
    EXPECT_EQ(row.n_outer, 1000);
    EXPECT_EQ(row.seed, 5u);
    EXPECT_GE(row.power, 0.0);
    EXPECT_LE(row.power, 1.0);
    EXPECT_NEAR(row.mc_se, std::sqrt(row.power * (1.0 - row.power) / 1000.0), 1e-15);
  }
  // Size near alpha at delta = 0, power near 1 far out.
  for (std::size_t ti = 0; ti < req.tests.size(); ++ti) {
    EXPECT_LT(std::abs(t.rows[3 * ti].power - 0.05), 0.035);
  }
  EXPECT_GT(t.rows[2].power, 0.9);
}

TEST(PowerCurve, DeterministicAndThreadInvariant) {
  PowerRequest req = small_request(11);
  req.threads = 1;
  const std::string one = to_csv(power_curve(req));
  req.threads = 4;
  EXPECT_EQ(to_csv(power_curve(req)), one);
  EXPECT_EQ(to_csv(power_curve(req)), one);
  req.seed = 12;
  EXPECT_NE(to_csv(power_curve(req)), one);
}

TEST(PowerCurve, MultiAlphaPassMatchesSeparateRuns) {
  PowerRequest req = small_request(13);
  const std::vector<double> alphas = {0.01, 0.05, 0.1};
  const std::vector<PowerTable> multi = power_curves(req, alphas);
  ASSERT_EQ(multi.size(), 3u);
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    req.alpha = alphas[a];
    EXPECT_EQ(to_csv(multi[a]), to_csv(power_curve(req))) << alphas[a];
    for (const PowerRow& row : multi[a].rows) EXPECT_EQ(row.alpha, alphas[a]);
  }
  for (std::size_t i = 0; i < multi[0].rows.size(); ++i) {
    EXPECT_LE(multi[0].rows[i].power, multi[1].rows[i].power);
    EXPECT_LE(multi[1].rows[i].power, multi[2].rows[i].power);
  }
}

TEST(PowerCsv, HeaderAndRows) {
  const std::string csv = to_csv(power_curve(small_request()));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "test,delta,d,power,mc_se,n_outer,seed");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
  }
  EXPECT_EQ(rows, 12);
  EXPECT_EQ(csv.rfind("AR,0,0,", csv.find('\n') + 1), csv.find('\n') + 1);
}

TEST(SizeSweep, OneRowPerFirstStageAndTest) {
  std::mt19937_64 rng(81);
  const ModelConfig c = random_config(2, 0.0, rng);
  std::vector<Vector> mus = {Vector::Zero(2), Vector::Ones(2)};
  const PowerTable t = size_sweep(c, mus, {TestKind::AR, TestKind::CLR}, 0.05, 1000, 3, 1000, 2);
  ASSERT_EQ(t.rows.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(t.rows[i].mu_index, i / 2);
    EXPECT_EQ(t.rows[i].delta, 0.0);
    EXPECT_LT(std::abs(t.rows[i].power - 0.05), 0.035);
  }
  EXPECT_EQ(t.rows[0].n_degenerate + t.rows[1].n_degenerate, 0);
}
