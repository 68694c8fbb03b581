#pragma once

#include <string_view>

#include <Eigen/Dense>

namespace weakiv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Smallest admissible eigenvalue of an SPD input, relative to its largest.
inline constexpr double kSpdRelativeFloor = 1e-10;
/// Relative asymmetry tolerated before a matrix is rejected as non-symmetric.
inline constexpr double kSymmetryTolerance = 1e-12;

bool is_symmetric(const Matrix& m, double rel_tol = kSymmetryTolerance);

/// Throws NonPositiveDefinite unless `m` is symmetric with
/// lambda_min > kSpdRelativeFloor * lambda_max.
void require_spd(const Matrix& m, std::string_view what);

/// Symmetric matrix power V diag(w^p) V' of an SPD matrix.
Matrix sym_power(const Matrix& m, double p);
inline Matrix sym_sqrt(const Matrix& m) { return sym_power(m, 0.5); }
inline Matrix sym_inv_sqrt(const Matrix& m) { return sym_power(m, -0.5); }

/// Inverse of an SPD matrix via LDLT, symmetrized.
Matrix spd_inverse(const Matrix& m);

/// (b' (x) I_k) as a k x 2k matrix.
Matrix kron_row(double b1, double b2, Eigen::Index k);

}  // namespace weakiv
