#pragma once

// Q(beta) = vec(R)' (b (x) I) [(b' (x) I) Sigma (b (x) I)]^{-1} (b' (x) I) vec(R)
// on the compactified direction b(theta) = (cos theta, -sin theta), theta in
// [0, pi). beta = tan(theta); theta = pi/2 is the beta -> +-infinity endpoint.

#include <array>
#include <span>

#include "weakiv/linalg.hpp"
#include "weakiv/model.hpp"

namespace weakiv {

inline constexpr int kProfileGridSize = 256;
inline constexpr int kRefinedMinima = 3;
inline constexpr double kThetaTolerance = 1e-10;

struct QMinimum {
  double q_min = 0.0;
  double theta_min = 0.0;
  double beta_min = 0.0;  // +infinity when the b = (0, -1) endpoint wins
};

double theta_of_beta(double beta);
double beta_of_theta(double theta);

class QProfile {
 public:
  /// Scratch buffers for one thread.
  struct Workspace {
    explicit Workspace(Eigen::Index k);
    Eigen::LLT<Matrix> llt;
    Matrix omega;
    Vector x, xp, y, u, yp, py, cy, ny;
  };

  struct Derivatives {
    double q, dq, d2q;
  };

  explicit QProfile(const ModelConfig& config);

  Eigen::Index k() const { return k_; }
  double theta0() const { return theta0_; }
  double grid_theta(int j) const { return theta_[j]; }
  double grid_cos(int j) const { return cos_[j]; }
  double grid_sin(int j) const { return sin_[j]; }
  /// Stacked lower-triangular whiteners L_j^{-1} (grid * k rows, k columns),
  /// with Omega(theta_j) = L_j L_j'.
  const Matrix& whiteners() const { return whiteners_; }

  double evaluate(double theta, const Vector& vec_r, Workspace& ws) const;
  double evaluate(double theta, const Vector& vec_r) const;
  Derivatives derivatives(double theta, const Vector& vec_r, Workspace& ws) const;

  void grid_values(const Vector& vec_r, std::span<double> out) const;

  QMinimum minimize(const Vector& vec_r) const;
  QMinimum minimize(const Vector& vec_r, Workspace& ws) const;

  /// Shared tail of minimize(): refines the best local minima of a precomputed
  /// grid and adds the theta0 candidate with the supplied value Q(beta0).
  QMinimum minimize_from_grid(std::span<const double> grid, const Vector& vec_r,
                              double theta0_value, Workspace& ws) const;

  /// Grid indices of the best circular local minima, best first (ties to the
  /// smaller index). Returns how many were found.
  int local_minima(std::span<const double> grid, std::array<int, kRefinedMinima>& picks) const;

  /// Safeguarded Newton on Q' inside [theta_{j-1}, theta_{j+1}], started at the
  /// parabolic vertex. Returns the best value seen; theta_out is wrapped to [0, pi).
  double refine(int j, std::span<const double> grid, const Vector& vec_r, Workspace& ws,
                double& theta_out) const;

 private:
  void build_omega(double c, double s, Matrix& out) const;

  Eigen::Index k_;
  double theta0_;
  Matrix p_, n_, c_;  // Omega(theta) = cos^2 P - cos sin C + sin^2 N
  std::array<double, kProfileGridSize> theta_{}, cos_{}, sin_{};
  Matrix whiteners_;
};

}  // namespace weakiv
