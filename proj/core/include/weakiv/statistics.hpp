#pragma once

#include "weakiv/model.hpp"
#include "weakiv/q_profile.hpp"

namespace weakiv {

/// Norm of the LM direction below which T counts as numerically zero.
inline constexpr double kDegenerateDirection = 1e-12;

struct LmPair {
  double lm1 = 0.0;
  double lm = 0.0;
};

struct RankPair {
  double r1 = 0.0;
  double r2 = 0.0;
};

struct StatBundle {
  double ar = 0.0;
  double lm1 = 0.0;
  double lm = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
  double qlr1 = 0.0;
  double qlr2 = 0.0;
  double lr = 0.0;
  double beta_min = 0.0;
};

double ar_stat(const Vector& s);

/// Throws DegenerateDirection when the LM direction has norm <= 1e-12.
LmPair lm_stats(const StatPair& pair, const RotatedBlocks& blocks);

RankPair rank_stats(const Vector& t, const RotatedBlocks& blocks);

/// Throws InvalidInput unless 0 <= lm <= ar + 1e-9 and r >= 0.
double qlr_stat(double ar, double lm, double r);

/// Q at beta (infinite beta selects the b = (0, -1) direction).
double q_beta(const Vector& vec_r, const ModelConfig& config, double beta);
/// Q at the unnormalized direction b = (b1, b2).
double q_direction(const Vector& vec_r, const ModelConfig& config, double b1, double b2);

QMinimum minimize_q(const Vector& vec_r, const ModelConfig& config);

double lr_stat(const Vector& vec_r, const ModelConfig& config);

/// Every statistic at one vec(R). Throws DegenerateDirection like lm_stats.
StatBundle compute_statistics(const Vector& vec_r, const Model& model, const QProfile& profile);

}  // namespace weakiv
