#include "weakiv/linalg.hpp"

#include <cmath>
#include <string>

#include "weakiv/errors.hpp"

namespace weakiv {

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

void require_spd(const Matrix& m, std::string_view what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorKind::DimensionMismatch, std::string(what) + " must be square and non-empty");
  }
  if (!m.allFinite()) {
    throw Error(ErrorKind::NonPositiveDefinite, std::string(what) + " has non-finite entries");
  }
  if (!is_symmetric(m)) {
    throw Error(ErrorKind::NonPositiveDefinite, std::string(what) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  const auto& w = eig.eigenvalues();
  if (!(w(w.size() - 1) > 0.0) || w(0) <= kSpdRelativeFloor * w(w.size() - 1)) {
    throw Error(ErrorKind::NonPositiveDefinite,
                std::string(what) + " is not positive definite (eigenvalue ratio " +
                    std::to_string(w(0) / w(w.size() - 1)) + ")");
  }
}

Matrix sym_power(const Matrix& m, double p) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (m + m.transpose()));
  const Vector w = eig.eigenvalues().unaryExpr([p](double x) { return std::pow(x, p); });
  const Matrix& v = eig.eigenvectors();
  Matrix out = v * w.asDiagonal() * v.transpose();
  return 0.5 * (out + out.transpose());
}

Matrix spd_inverse(const Matrix& m) {
  Matrix inv = m.ldlt().solve(Matrix::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

Matrix kron_row(double b1, double b2, Eigen::Index k) {
  Matrix out(k, 2 * k);
  out.leftCols(k) = b1 * Matrix::Identity(k, k);
  out.rightCols(k) = b2 * Matrix::Identity(k, k);
  return out;
}

}  // namespace weakiv
