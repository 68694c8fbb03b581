#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "weakiv/conditional.hpp"
#include "weakiv/model.hpp"

namespace weakiv {

inline constexpr int kMinOuterReps = 1000;
inline constexpr int kDefaultOuterReps = 10000;

struct PowerRequest {
  ModelConfig config;
  Vector mu;
  std::vector<double> delta_grid;
  std::vector<TestKind> tests;
  double alpha = 0.05;
  int n_outer = kDefaultOuterReps;
  int n_cond = kDefaultCondDraws;
  std::uint64_t seed = 0;
  unsigned threads = 0;      // 0: hardware concurrency; never affects results
  WeightFunction clc_weight;  // required when tests include CLC
};

struct PowerRow {
  TestKind test = TestKind::AR;
  double delta = 0.0;
  double d = 0.0;
  double power = 0.0;
  double mc_se = 0.0;
  int n_outer = 0;
  std::uint64_t seed = 0;
  double alpha = 0.05;
  int n_degenerate = 0;  // replications counted as non-rejections with T numerically zero
  std::size_t mu_index = 0;
};

struct PowerTable {
  std::vector<PowerRow> rows;
};

/// Throws InvalidInput / InsufficientDraws for malformed requests.
void validate(const PowerRequest& req);

/// Rows ordered by test (request order), then delta.
PowerTable power_curve(const PowerRequest& req);

/// One pass producing the table for several alpha levels; identical to
/// calling power_curve once per level with the same seed.
std::vector<PowerTable> power_curves(const PowerRequest& req, const std::vector<double>& alphas);

/// Null rejection rates (delta = 0) over a list of first stages; rows ordered
/// by mu, then test. mu_index records the position in mu_list.
PowerTable size_sweep(const ModelConfig& config, const std::vector<Vector>& mu_list,
                      const std::vector<TestKind>& tests, double alpha, int n_outer, std::uint64_t seed,
                      int n_cond = kDefaultCondDraws, unsigned threads = 0);

/// CSV with header test,delta,d,power,mc_se,n_outer,seed (shortest round-trip numbers).
std::string to_csv(const PowerTable& table);

}  // namespace weakiv
