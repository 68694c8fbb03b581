#pragma once

#include <optional>

#include "weakiv/model.hpp"

namespace weakiv {

inline constexpr double kDefaultFeasibilityTol = 1e-10;

struct IdGeometry {
  Matrix a_mat;    // Sigma11^{-1} Sigma21 Sigma11^{-1}
  Matrix h_mat;    // (A + A') / 2
  Vector eigvals;  // ascending
  Matrix eigvecs;  // columns match eigvals
  Matrix hbar;     // Sigma22^{1/2} H Sigma22^{1/2}
  Matrix sigma22;  // metric block used by the confidence bound
};

IdGeometry build_id_geometry(const RotatedBlocks& blocks);
/// Geometry of an explicit (Sigma22, H) pair; a_mat is set to H.
IdGeometry make_id_geometry(const Matrix& sigma22, const Matrix& h_mat);

struct Feasibility {
  bool feasible = false;
  std::optional<Vector> certificate;  // unit-norm mu with mu' A mu = 0
};

/// Some mu != 0 has mu' A mu = 0 iff the spectrum of H straddles zero.
Feasibility id_feasible(const IdGeometry& geom, double tol = kDefaultFeasibilityTol);

struct ConfidenceBound {
  double kappa_hat = 0.0;  // +infinity when the bound is attained only in the limit
  Vector mu_tilde;
  double bound = 0.0;
};

/// min (mu_hat - mu)' Sigma22^{-1} (mu_hat - mu) subject to mu' H mu = 0.
/// Definite H returns mu_tilde = 0 and kappa_hat = +infinity.
/// Throws NoRootFound or SingularFoc.
ConfidenceBound confidence_bound(const Vector& mu_hat, const IdGeometry& geom);

/// Smallest eta >= 0 with (mu_hat - eta mu_tilde)' Sigma22^{-1} (mu_hat - eta mu_tilde) <= cutoff.
/// Throws Infeasible when no scaling of mu_tilde reaches the set.
double eta_min(const Vector& mu_hat, const Vector& mu_tilde, const Matrix& sigma22, double cutoff);

/// Impossibility design: Sigma11 = I, Sigma22 = sigma22_scale I,
/// Sigma12 = offdiag_scale J (J the anti-diagonal identity), mu = sqrt(lambda) e1,
/// rotated back to the original frame at beta0.
struct IdDesign {
  ModelConfig config;
  Vector mu;
};

inline constexpr double kPresetOffdiagScale = 9.0;
inline constexpr double kPresetSigma22Scale = 100.0;

IdDesign make_id_design(int k, double lambda, double offdiag_scale, double sigma22_scale = 1.0,
                        double beta0 = 0.0);

struct DiagnosticReport {
  bool feasible = false;
  std::optional<Vector> certificate_mu;
  std::optional<double> kappa_hat;
  std::optional<Vector> mu_tilde;
  std::optional<double> confidence_bound;
  std::optional<double> eta_min;
  double cutoff = 0.0;
  bool intersects = false;
  double f_stat = 0.0;                        // mu_hat' Sigma22^{-1} mu_hat
  std::optional<double> ar_noncentrality;     // mu_tilde' Sigma11^{-1} mu_tilde
  Vector eigvals;
};

DiagnosticReport diagnose(const Vector& mu_hat, const Model& model, double alpha);

}  // namespace weakiv
