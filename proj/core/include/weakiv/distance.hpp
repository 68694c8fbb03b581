#pragma once

#include "weakiv/model.hpp"

namespace weakiv {

/// Null-side mean mu_i, alternative-side mean mu_j at separation delta, and
/// the required floor on delta^2 mu_j' Sigma11^{-1} mu_j.
struct SeparationSpec {
  Vector mu_i;
  Vector mu_j;
  double delta = 0.0;
  double d_floor = 1.0;
};

/// Squared Mahalanobis distance (under Sigma0^{-1}) between the means of
/// vec(R0) at (mu_i, 0) and (mu_j, delta), clamped at 0.
double delta_squared(const SeparationSpec& spec, const RotatedBlocks& blocks);

/// Total variation between two equal-covariance Gaussians at Mahalanobis
/// distance delta: 2 Phi(delta / 2) - 1.
double tv_gaussian(double delta);
/// Same distance through the chi2(1) form F(delta^2 / 4).
double tv_gaussian_chi2(double delta);

/// Upper bound F_{chi2(1)}(d / 4) on the hull-to-hull TV distance.
double hull_tv_upper_bound(double d);

/// Lower bound on CLR power at noncentrality d, clamped at 0.
double clr_power_lower_bound(double d, int k, double alpha);

/// Minimum of delta_squared over the separated alternatives: equals d_floor.
double min_delta_constrained(double d_floor);

}  // namespace weakiv
