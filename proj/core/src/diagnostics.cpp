#include "weakiv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "weakiv/errors.hpp"
#include "weakiv/special.hpp"

namespace weakiv {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kKappaGrid = 1024;
constexpr double kKappaReach = 1e8;
constexpr double kBisectionTol = 1e-12;
constexpr double kPoleGuard = 1e-10;

/// Whitened data for the kappa search: H-bar = Q diag(lambda) Q', z = Q' Sigma22^{-1/2} mu_hat.
struct Spectral {
  Vector lambda;
  Vector z;
  Matrix q;
  double scale = 0.0;  // spectral norm of H-bar
};

double constraint(const Spectral& sp, double kappa) {
  double g = 0.0;
  for (Eigen::Index i = 0; i < sp.lambda.size(); ++i) {
    const double d = 1.0 + kappa * sp.lambda(i);
    g += sp.lambda(i) * sp.z(i) * sp.z(i) / (d * d);
  }
  return g;
}

double objective(const Spectral& sp, double kappa) {
  double f = 0.0;
  for (Eigen::Index i = 0; i < sp.lambda.size(); ++i) {
    const double d = 1.0 + kappa * sp.lambda(i);
    const double v = kappa * sp.lambda(i) * sp.z(i) / d;
    f += v * v;
  }
  return f;
}

/// Points strictly inside (lo, hi), log-spaced in distance from each finite end.
std::vector<double> interval_grid(double lo, double hi, bool lo_finite, bool hi_finite) {
  std::vector<double> pts;
  const double width = hi - lo;
  const double floor = kBisectionTol * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  auto log_run = [&](double anchor, double sign, double reach, int n) {
    const double a = std::log(std::max(floor, reach * 1e-14));
    const double b = std::log(reach);
    for (int i = 0; i < n; ++i) {
      const double dist = std::exp(a + (b - a) * (i + 0.5) / n);
      pts.push_back(anchor + sign * dist);
    }
  };
  if (lo_finite && hi_finite) {
    log_run(lo, 1.0, width / 2, kKappaGrid / 2);
    log_run(hi, -1.0, width / 2, kKappaGrid / 2);
  } else if (lo_finite) {
    log_run(lo, 1.0, width, kKappaGrid);
  } else {
    log_run(hi, -1.0, width, kKappaGrid);
  }
  pts.erase(std::remove_if(pts.begin(), pts.end(), [&](double x) { return !(x > lo && x < hi); }), pts.end());
  if (lo < 0.0 && hi > 0.0) pts.push_back(0.0);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

double bisect(const Spectral& sp, double a, double b) {
  double ga = constraint(sp, a);
  for (int it = 0; it < 200 && b - a > kBisectionTol * std::max(1.0, std::abs(a)); ++it) {
    const double m = 0.5 * (a + b);
    const double gm = constraint(sp, m);
    if (gm == 0.0) return m;
    if ((gm < 0.0) == (ga < 0.0)) {
      a = m;
      ga = gm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

IdGeometry make_id_geometry(const Matrix& sigma22, const Matrix& h_mat) {
  if (sigma22.rows() != sigma22.cols() || h_mat.rows() != sigma22.rows() || h_mat.cols() != sigma22.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "Sigma22 and H must be k x k");
  }
  require_spd(sigma22, "Sigma22");
  IdGeometry geom;
  geom.a_mat = h_mat;
  geom.h_mat = 0.5 * (h_mat + h_mat.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(geom.h_mat);
  geom.eigvals = eig.eigenvalues();
  geom.eigvecs = eig.eigenvectors();
  const Matrix root = sym_sqrt(sigma22);
  geom.hbar = root * geom.h_mat * root;
  geom.hbar = 0.5 * (geom.hbar + geom.hbar.transpose());
  geom.sigma22 = sigma22;
  return geom;
}

IdGeometry build_id_geometry(const RotatedBlocks& blocks) {
  const Matrix a = blocks.sigma11_inv * blocks.sigma21 * blocks.sigma11_inv;
  IdGeometry geom = make_id_geometry(blocks.sigma22, a);
  geom.a_mat = a;
  return geom;
}

Feasibility id_feasible(const IdGeometry& geom, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidInput, "tol must be positive");
  Feasibility out;
  const Eigen::Index k = geom.eigvals.size();
  const double norm = geom.eigvals.cwiseAbs().maxCoeff();
  const double lo = geom.eigvals(0);
  const double hi = geom.eigvals(k - 1);
  const double slack = tol * norm;
  out.feasible = lo <= slack && hi >= -slack;
  if (!out.feasible) return out;

  if (norm == 0.0) {
    out.certificate = Vector::Unit(k, 0);
    return out;
  }
  // Prefer an eigenvector of a numerically zero eigenvalue, else mix the
  // extreme eigenvalues of opposite sign.
  Eigen::Index zero = 0;
  geom.eigvals.cwiseAbs().minCoeff(&zero);
  Vector mu;
  if (std::abs(geom.eigvals(zero)) <= slack) {
    mu = geom.eigvecs.col(zero);
  } else {
    mu = std::sqrt(-lo) * geom.eigvecs.col(k - 1) + std::sqrt(hi) * geom.eigvecs.col(0);
  }
  out.certificate = mu.normalized();
  return out;
}

ConfidenceBound confidence_bound(const Vector& mu_hat, const IdGeometry& geom) {
  const Eigen::Index k = geom.hbar.rows();
  if (mu_hat.size() != k) throw Error(ErrorKind::DimensionMismatch, "mu_hat must have k entries");
  const Matrix root = sym_sqrt(geom.sigma22);
  const Matrix inv_root = sym_inv_sqrt(geom.sigma22);
  const Vector white = inv_root * mu_hat;

  ConfidenceBound out;
  if (!id_feasible(geom).feasible) {
    out.kappa_hat = kInf;
    out.mu_tilde = Vector::Zero(k);
    out.bound = white.squaredNorm();
    return out;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(geom.hbar);
  Spectral sp;
  sp.lambda = eig.eigenvalues();
  sp.q = eig.eigenvectors();
  sp.z = sp.q.transpose() * white;
  sp.scale = sp.lambda.cwiseAbs().maxCoeff();

  const double g_scale = (sp.lambda.cwiseAbs().array() * sp.z.array().square()).sum();
  if (sp.scale == 0.0 || std::abs(constraint(sp, 0.0)) <= 1e-14 * g_scale) {
    out.kappa_hat = 0.0;
    out.mu_tilde = mu_hat;
    out.bound = 0.0;
    return out;
  }

  const double zero_tol = kDefaultFeasibilityTol * sp.scale;
  std::vector<double> poles;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(sp.lambda(i)) > zero_tol) poles.push_back(-1.0 / sp.lambda(i));
  }
  std::sort(poles.begin(), poles.end());
  poles.erase(std::unique(poles.begin(), poles.end()), poles.end());

  const double reach = kKappaReach / sp.scale;
  std::vector<double> edges;
  edges.push_back(-reach);
  for (double p : poles) {
    if (p > -reach && p < reach) edges.push_back(p);
  }
  edges.push_back(reach);

  std::vector<double> roots;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const bool lo_finite = e != 0;
    const bool hi_finite = e + 2 != edges.size();
    const std::vector<double> pts = interval_grid(edges[e], edges[e + 1], lo_finite, hi_finite);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double gi = constraint(sp, pts[i]);
      if (gi == 0.0) {
        roots.push_back(pts[i]);
        continue;
      }
      if (i + 1 < pts.size()) {
        const double gj = constraint(sp, pts[i + 1]);
        if (gj != 0.0 && (gi < 0.0) != (gj < 0.0)) roots.push_back(bisect(sp, pts[i], pts[i + 1]));
      }
    }
  }

  struct Candidate {
    double obj = kInf;
    double kappa = 0.0;
    Vector y;  // mu_tilde in whitened eigen coordinates
  };
  Candidate best;
  auto offer = [&](double obj, double kappa, Vector y) {
    if (obj < best.obj || (obj == best.obj && std::abs(kappa) < std::abs(best.kappa))) best = {obj, kappa, std::move(y)};
  };
  for (double kappa : roots) {
    Vector y(k);
    for (Eigen::Index i = 0; i < k; ++i) y(i) = sp.z(i) / (1.0 + kappa * sp.lambda(i));
    offer(objective(sp, kappa), kappa, std::move(y));
  }

  // A pole whose eigenspace carries no mass of z: the FOC holds there for any
  // step t along that eigenspace, and t is fixed by the constraint.
  const double z_tol = 1e-10 * sp.z.norm();
  for (double pole : poles) {
    double g_rest = 0.0, obj_rest = 0.0, lam = 0.0;
    Eigen::Index free_dir = -1;
    bool massless = true;
    Vector y = Vector::Zero(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const double d = 1.0 + pole * sp.lambda(i);
      if (std::abs(d) <= kPoleGuard) {
        massless = massless && std::abs(sp.z(i)) <= z_tol;
        free_dir = i;
        lam = sp.lambda(i);
        continue;
      }
      y(i) = sp.z(i) / d;
      g_rest += sp.lambda(i) * y(i) * y(i);
      obj_rest += (pole * sp.lambda(i) * y(i)) * (pole * sp.lambda(i) * y(i));
    }
    if (!massless || free_dir < 0) continue;
    const double t2 = -g_rest / lam;
    if (t2 < 0.0) continue;
    y(free_dir) = std::sqrt(t2);
    offer(obj_rest + t2, pole, std::move(y));
  }

  // With a null direction of H, the infimum can sit at kappa -> infinity:
  // mu_tilde is then the projection onto ker(H-bar) in whitened coordinates.
  bool has_null = false;
  double limit_obj = 0.0;
  Vector limit_z = sp.z;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(sp.lambda(i)) <= zero_tol) {
      has_null = true;
    } else {
      limit_obj += sp.z(i) * sp.z(i);
      limit_z(i) = 0.0;
    }
  }
  if (has_null && limit_obj < best.obj) best = {limit_obj, kInf, limit_z};
  if (!(best.obj < kInf)) throw Error(ErrorKind::NoRootFound, "no sign change of the scalar constraint in kappa");

  if (std::isfinite(best.kappa)) {
    // Sign-change roots must stay off the poles, where the FOC matrix is singular.
    for (Eigen::Index i = 0; i < k; ++i) {
      if (std::abs(1.0 + best.kappa * sp.lambda(i)) <= kPoleGuard && std::abs(sp.z(i)) > z_tol) {
        throw Error(ErrorKind::SingularFoc, "selected kappa sits on a pole");
      }
    }
  }
  out.kappa_hat = best.kappa;
  out.mu_tilde = root * (sp.q * best.y);
  out.bound = best.obj;
  return out;
}

double eta_min(const Vector& mu_hat, const Vector& mu_tilde, const Matrix& sigma22, double cutoff) {
  if (mu_hat.size() != sigma22.rows() || mu_tilde.size() != sigma22.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "vectors must have k entries");
  }
  const Matrix w = spd_inverse(sigma22);
  const double hh = mu_hat.dot(w * mu_hat);
  if (hh <= cutoff) return 0.0;
  const double tt = mu_tilde.dot(w * mu_tilde);
  if (!(tt > 0.0)) throw Error(ErrorKind::Infeasible, "mu_tilde is zero");
  const double a = mu_tilde.dot(w * mu_hat) / tt;
  const double disc = a * a - (hh - cutoff) / tt;
  if (disc < 0.0) throw Error(ErrorKind::Infeasible, "no scaling of mu_tilde enters the confidence set");
  const double root = std::sqrt(disc);
  const double small = a - root;
  const double large = a + root;
  // hh > cutoff keeps eta = 0 outside the set, so both roots share a sign.
  return small >= 0.0 ? small : large;
}

IdDesign make_id_design(int k, double lambda, double offdiag_scale, double sigma22_scale, double beta0) {
  if (k < 2) throw Error(ErrorKind::InvalidInput, "the design needs k >= 2");
  if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidInput, "lambda must be positive");
  if (!(sigma22_scale > 0.0)) throw Error(ErrorKind::InvalidInput, "sigma22_scale must be positive");
  const Eigen::Index n = k;
  Matrix sigma0 = Matrix::Zero(2 * n, 2 * n);
  sigma0.topLeftCorner(n, n).setIdentity();
  sigma0.bottomRightCorner(n, n) = sigma22_scale * Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sigma0(i, 2 * n - 1 - i) = offdiag_scale;
    sigma0(n + i, n - 1 - i) = offdiag_scale;
  }
  require_spd(sigma0, "Sigma0");
  // Undo the rotation: vec(R) = [[I, beta0 I], [0, I]] vec(R0).
  Matrix unrotate = Matrix::Identity(2 * n, 2 * n);
  unrotate.topRightCorner(n, n) = beta0 * Matrix::Identity(n, n);
  IdDesign out;
  out.config.k = k;
  out.config.beta0 = beta0;
  out.config.sigma = unrotate * sigma0 * unrotate.transpose();
  out.config.sigma = 0.5 * (out.config.sigma + out.config.sigma.transpose());
  out.mu = Vector::Zero(n);
  out.mu(0) = std::sqrt(lambda);
  return out;
}

DiagnosticReport diagnose(const Vector& mu_hat, const Model& model, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidInput, "alpha must lie in (0, 1)");
  const RotatedBlocks& blocks = model.blocks;
  if (mu_hat.size() != blocks.k()) throw Error(ErrorKind::DimensionMismatch, "mu_hat must have k entries");
  const IdGeometry geom = build_id_geometry(blocks);
  DiagnosticReport report;
  report.eigvals = geom.eigvals;
  report.cutoff = chi2_quantile(1.0 - alpha, static_cast<int>(blocks.k()));
  report.f_stat = mu_hat.dot(spd_inverse(blocks.sigma22) * mu_hat);
  const Feasibility feas = id_feasible(geom);
  report.feasible = feas.feasible;
  report.certificate_mu = feas.certificate;
  if (!feas.feasible) return report;

  const ConfidenceBound cb = confidence_bound(mu_hat, geom);
  report.kappa_hat = cb.kappa_hat;
  report.mu_tilde = cb.mu_tilde;
  report.confidence_bound = cb.bound;
  report.intersects = cb.bound <= report.cutoff;
  report.ar_noncentrality = cb.mu_tilde.dot(blocks.sigma11_inv * cb.mu_tilde);
  try {
    report.eta_min = eta_min(mu_hat, cb.mu_tilde, blocks.sigma22, report.cutoff);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Infeasible) throw;
  }
  return report;
}

}  // namespace weakiv
