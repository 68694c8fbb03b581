#pragma once

// Dense reference implementations and random instance generators for tests.

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "weakiv/linalg.hpp"
#include "weakiv/model.hpp"

namespace weakiv::testing {

/// Random SPD matrix with eigenvalues spread over [1, cond].
inline Matrix random_spd(Eigen::Index n, double cond, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = normal(rng);
  }
  const Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  Vector eig(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index i = 0; i < n; ++i) eig(i) = std::pow(cond, unit(rng));
  eig(0) = 1.0;
  if (n > 1) eig(n - 1) = cond;
  Matrix m = q * eig.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

inline ModelConfig random_config(int k, double beta0, std::mt19937_64& rng, double cond = 5.0) {
  ModelConfig c;
  c.k = k;
  c.beta0 = beta0;
  c.sigma = random_spd(2 * k, cond, rng);
  return c;
}

/// Explicit Kronecker product.
inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

/// S and T from their defining Kronecker sandwiches.
inline StatPair dense_st(const Vector& vec_r, const ModelConfig& c) {
  const Matrix eye = Matrix::Identity(c.k, c.k);
  Matrix b0(2, 1), a0(2, 1);
  b0 << 1.0, -c.beta0;
  a0 << c.beta0, 1.0;
  const Matrix bk = kron(b0, eye);
  const Matrix ak = kron(a0, eye);
  const Matrix sigma_inv = c.sigma.inverse();
  StatPair out;
  out.s = sym_inv_sqrt(bk.transpose() * c.sigma * bk) * (bk.transpose() * vec_r);
  out.t = sym_inv_sqrt(ak.transpose() * sigma_inv * ak) * (ak.transpose() * sigma_inv * vec_r);
  return out;
}

/// Q at direction b = (b1, b2) by explicit Kronecker algebra.
inline double dense_q(const Vector& vec_r, const ModelConfig& c, double b1, double b2) {
  Matrix b(2, 1);
  b << b1, b2;
  const Matrix bk = kron(b, Matrix::Identity(c.k, c.k));
  const Vector x = bk.transpose() * vec_r;
  return x.dot((bk.transpose() * c.sigma * bk).ldlt().solve(x));
}

/// Brute-force minimum of Q over n equally spaced directions on the half circle.
inline double grid_min_q(const Vector& vec_r, const ModelConfig& c, int n) {
  double best = INFINITY;
  for (int j = 0; j < n; ++j) {
    const double th = M_PI * j / n;
    best = std::min(best, dense_q(vec_r, c, std::cos(th), -std::sin(th)));
  }
  return best;
}

}  // namespace weakiv::testing
