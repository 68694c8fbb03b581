#include "weakiv/q_profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "weakiv/errors.hpp"

namespace weakiv {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kStep = kPi / kProfileGridSize;

double wrap(double theta) {
  double t = std::fmod(theta, kPi);
  if (t < 0.0) t += kPi;
  if (t >= kPi) t -= kPi;
  return t;
}

}  // namespace

double theta_of_beta(double beta) {
  if (std::isinf(beta)) return kPi / 2;
  return wrap(std::atan(beta));
}

double beta_of_theta(double theta) {
  const double c = std::cos(theta);
  if (std::abs(c) <= 1e-12) return std::numeric_limits<double>::infinity();
  return std::sin(theta) / c;
}

QProfile::Workspace::Workspace(Eigen::Index k)
    : llt(k), omega(k, k), x(k), xp(k), y(k), u(k), yp(k), py(k), cy(k), ny(k) {}

QProfile::QProfile(const ModelConfig& config) : k_(config.k) {
  validate(config);
  theta0_ = theta_of_beta(config.beta0);
  p_ = config.sigma.topLeftCorner(k_, k_);
  n_ = config.sigma.bottomRightCorner(k_, k_);
  c_ = config.sigma.topRightCorner(k_, k_) + config.sigma.bottomLeftCorner(k_, k_);

  whiteners_.resize(kProfileGridSize * k_, k_);
  Matrix omega(k_, k_);
  for (int j = 0; j < kProfileGridSize; ++j) {
    theta_[j] = j * kStep;
    cos_[j] = std::cos(theta_[j]);
    sin_[j] = std::sin(theta_[j]);
    build_omega(cos_[j], sin_[j], omega);
    Eigen::LLT<Matrix> llt(omega);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::NonPositiveDefinite, "(b'(x)I) Sigma (b(x)I) factorization failed");
    }
    Matrix linv = Matrix::Identity(k_, k_);
    llt.matrixL().solveInPlace(linv);
    whiteners_.middleRows(j * k_, k_) = linv;
  }
}

void QProfile::build_omega(double c, double s, Matrix& out) const {
  out.noalias() = (c * c) * p_;
  out.noalias() -= (c * s) * c_;
  out.noalias() += (s * s) * n_;
}

double QProfile::evaluate(double theta, const Vector& vec_r, Workspace& ws) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  build_omega(c, s, ws.omega);
  ws.llt.compute(ws.omega);
  if (ws.llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NonPositiveDefinite, "(b'(x)I) Sigma (b(x)I) factorization failed");
  }
  ws.x.noalias() = c * vec_r.head(k_) - s * vec_r.tail(k_);
  ws.y = ws.x;
  ws.llt.matrixL().solveInPlace(ws.y);
  return ws.y.squaredNorm();
}

double QProfile::evaluate(double theta, const Vector& vec_r) const {
  Workspace ws(k_);
  return evaluate(theta, vec_r, ws);
}

QProfile::Derivatives QProfile::derivatives(double theta, const Vector& vec_r, Workspace& ws) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double s2 = 2.0 * s * c;
  const double c2 = c * c - s * s;

  build_omega(c, s, ws.omega);
  ws.llt.compute(ws.omega);
  if (ws.llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NonPositiveDefinite, "(b'(x)I) Sigma (b(x)I) factorization failed");
  }
  const auto r1 = vec_r.head(k_);
  const auto r2 = vec_r.tail(k_);
  ws.x.noalias() = c * r1 - s * r2;
  ws.xp.noalias() = -s * r1 - c * r2;
  ws.y = ws.llt.solve(ws.x);

  ws.py.noalias() = p_ * ws.y;
  ws.cy.noalias() = c_ * ws.y;
  ws.ny.noalias() = n_ * ws.y;
  // Omega' y and Omega'' y from the three block products.
  const Vector d1y = -s2 * ws.py - c2 * ws.cy + s2 * ws.ny;
  const Vector d2y = -2.0 * c2 * ws.py + 2.0 * s2 * ws.cy + 2.0 * c2 * ws.ny;

  ws.u = ws.xp - d1y;
  ws.yp = ws.llt.solve(ws.u);

  Derivatives d;
  d.q = ws.x.dot(ws.y);
  d.dq = 2.0 * ws.xp.dot(ws.y) - ws.y.dot(d1y);
  d.d2q = -2.0 * d.q + 2.0 * ws.xp.dot(ws.yp) - 2.0 * ws.yp.dot(d1y) - ws.y.dot(d2y);
  return d;
}

void QProfile::grid_values(const Vector& vec_r, std::span<double> out) const {
  Vector x(k_);
  for (int j = 0; j < kProfileGridSize; ++j) {
    x.noalias() = cos_[j] * vec_r.head(k_) - sin_[j] * vec_r.tail(k_);
    out[j] = (whiteners_.middleRows(j * k_, k_).triangularView<Eigen::Lower>() * x).squaredNorm();
  }
}

double QProfile::refine(int j, std::span<const double> grid, const Vector& vec_r, Workspace& ws,
                        double& theta_out) const {
  const int n = kProfileGridSize;
  const double qm = grid[(j + n - 1) % n];
  const double q0 = grid[j];
  const double qp = grid[(j + 1) % n];

  // Work on an unwrapped bracket around theta_j.
  double lo = theta_[j] - kStep;
  double hi = theta_[j] + kStep;
  double theta = theta_[j];
  const double curv = qm - 2.0 * q0 + qp;
  if (curv > 0.0) theta += 0.5 * kStep * (qm - qp) / curv;

  double best_q = q0;
  double best_theta = theta_[j];
  for (int it = 0; it < 60; ++it) {
    const Derivatives d = derivatives(theta, vec_r, ws);
    if (d.q < best_q || (d.q == best_q && wrap(theta) < wrap(best_theta))) {
      best_q = d.q;
      best_theta = theta;
    }
    if (d.dq == 0.0) break;
    if (d.dq > 0.0) hi = theta; else lo = theta;
    double next = d.d2q > 0.0 ? theta - d.dq / d.d2q : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const bool done = std::abs(next - theta) < kThetaTolerance || hi - lo < kThetaTolerance;
    theta = next;
    if (done) {
      const double q = evaluate(theta, vec_r, ws);
      if (q < best_q) {
        best_q = q;
        best_theta = theta;
      }
      break;
    }
  }
  theta_out = wrap(best_theta);
  return best_q;
}

int QProfile::local_minima(std::span<const double> grid, std::array<int, kRefinedMinima>& picks) const {
  const int n = kProfileGridSize;
  int n_picks = 0;
  for (int j = 0; j < n; ++j) {
    const double q = grid[j];
    if (!(q < grid[(j + n - 1) % n] && q <= grid[(j + 1) % n])) continue;
    int pos = n_picks;
    while (pos > 0 && grid[picks[pos - 1]] > q) --pos;
    if (pos >= kRefinedMinima) continue;
    for (int m = std::min(n_picks, kRefinedMinima - 1); m > pos; --m) picks[m] = picks[m - 1];
    picks[pos] = j;
    n_picks = std::min(n_picks + 1, kRefinedMinima);
  }
  return n_picks;
}

QMinimum QProfile::minimize_from_grid(std::span<const double> grid, const Vector& vec_r,
                                      double theta0_value, Workspace& ws) const {
  const int n = kProfileGridSize;

  std::array<int, kRefinedMinima> picks{};
  const int n_picks = local_minima(grid, picks);

  QMinimum best;
  best.q_min = std::numeric_limits<double>::infinity();
  auto consider = [&best](double q, double theta) {
    if (q < best.q_min || (q == best.q_min && theta < best.theta_min)) {
      best.q_min = q;
      best.theta_min = theta;
    }
  };
  for (int j = 0; j < n; ++j) consider(grid[j], theta_[j]);
  consider(theta0_value, theta0_);
  for (int i = 0; i < n_picks; ++i) {
    double theta = 0.0;
    const double q = refine(picks[i], grid, vec_r, ws, theta);
    consider(q, theta);
  }
  best.q_min = std::max(0.0, best.q_min);
  best.beta_min = beta_of_theta(best.theta_min);
  return best;
}

QMinimum QProfile::minimize(const Vector& vec_r, Workspace& ws) const {
  if (vec_r.size() != 2 * k_) throw Error(ErrorKind::DimensionMismatch, "vec_r must have 2k entries");
  if (k_ == 1) {
    // Rank one: Q vanishes on the direction orthogonal to (r1, r2).
    QMinimum m;
    m.q_min = 0.0;
    const double r1 = vec_r(0);
    const double r2 = vec_r(1);
    m.beta_min = r2 != 0.0 ? r1 / r2 : (r1 != 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    m.theta_min = theta_of_beta(m.beta_min);
    return m;
  }
  std::array<double, kProfileGridSize> grid{};
  grid_values(vec_r, grid);
  return minimize_from_grid(grid, vec_r, evaluate(theta0_, vec_r, ws), ws);
}

QMinimum QProfile::minimize(const Vector& vec_r) const {
  Workspace ws(k_);
  return minimize(vec_r, ws);
}

}  // namespace weakiv
