#pragma once

#include "weakiv/model.hpp"

namespace weakiv {

/// First-stage description. pi and d_mat enter the variance; mu is the
/// standardized first stage, bridged in simulation by mu = sqrt(n) D^{1/2} pi.
struct AsymptoticInputs {
  Vector pi;
  Matrix d_mat;
  double h_delta = 0.0;
  double delta = 0.0;
  Vector mu;
};

/// Drift of LM1 under local alternatives Delta = h / sqrt(n):
/// h (pi' D^{1/2} Sigma11^{-1} D^{1/2} pi)^{1/2}.
double lm_la_drift(const AsymptoticInputs& inputs, const RotatedBlocks& blocks);

/// Fixed-alternative drift c(Delta, mu). Throws DegenerateDenominator.
double lm_fa_drift(double delta, const Vector& mu, const RotatedBlocks& blocks);

/// Fixed-alternative limiting variance of LM1 - c(Delta, mu). Throws DegenerateGamma.
double lm_fa_variance(double delta, const AsymptoticInputs& inputs, const RotatedBlocks& blocks);

/// The variance split by source: numerator noise (>= 1) plus the correction
/// from denominator noise (may be negative). They sum to lm_fa_variance.
struct VarianceComponents {
  double numerator = 1.0;
  double denominator = 0.0;
};
VarianceComponents lm_fa_variance_components(double delta, const AsymptoticInputs& inputs,
                                             const RotatedBlocks& blocks);

/// Large-Delta limit of the drift when mu' Sigma11^{-1} Sigma21 Sigma11^{-1} mu = 0.
/// Throws DegenerateDenominator when Sigma21 Sigma11^{-1} mu vanishes.
double lm_id_limit(const Vector& mu, const RotatedBlocks& blocks);

}  // namespace weakiv
