#include "weakiv/statistics.hpp"

#include <algorithm>
#include <cmath>

#include "weakiv/errors.hpp"

namespace weakiv {

double ar_stat(const Vector& s) { return s.squaredNorm(); }

LmPair lm_stats(const StatPair& pair, const RotatedBlocks& blocks) {
  if (pair.s.size() != blocks.k() || pair.t.size() != blocks.k()) {
    throw Error(ErrorKind::DimensionMismatch, "S and T must have k entries");
  }
  const Vector g = blocks.lm_direction * pair.t;
  const double norm = g.norm();
  if (!(norm > kDegenerateDirection)) {
    throw Error(ErrorKind::DegenerateDirection, "LM direction vanishes (T numerically zero)");
  }
  LmPair out;
  out.lm1 = pair.s.dot(g) / norm;
  out.lm = out.lm1 * out.lm1;
  return out;
}

RankPair rank_stats(const Vector& t, const RotatedBlocks& blocks) {
  if (t.size() != blocks.k()) throw Error(ErrorKind::DimensionMismatch, "T must have k entries");
  return {t.squaredNorm(), (blocks.lm_direction * t).squaredNorm()};
}

double qlr_stat(double ar, double lm, double r) {
  if (!(ar >= 0.0) || !(lm >= 0.0) || !(r >= 0.0)) {
    throw Error(ErrorKind::InvalidInput, "qlr_stat needs nonnegative ar, lm, r");
  }
  if (lm > ar + 1e-9) throw Error(ErrorKind::InvalidInput, "lm exceeds ar");
  lm = std::min(lm, ar);
  const double gap = ar - r;
  const double disc = std::sqrt(gap * gap + 4.0 * lm * r);
  // Rationalized branch avoids cancellation when r dominates.
  if (gap >= 0.0) return 0.5 * (gap + disc);
  return disc - gap > 0.0 ? 2.0 * lm * r / (disc - gap) : 0.0;
}

double q_direction(const Vector& vec_r, const ModelConfig& config, double b1, double b2) {
  const Eigen::Index k = config.k;
  if (vec_r.size() != 2 * k) throw Error(ErrorKind::DimensionMismatch, "vec_r must have 2k entries");
  const double scale = std::hypot(b1, b2);
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::InvalidInput, "direction must be finite and nonzero");
  }
  const Matrix row = kron_row(b1 / scale, b2 / scale, k);
  const Matrix omega = row * config.sigma * row.transpose();
  Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::NonPositiveDefinite, "(b'(x)I) Sigma (b(x)I) factorization failed");
  }
  Vector x = row * vec_r;
  llt.matrixL().solveInPlace(x);
  return x.squaredNorm();
}

double q_beta(const Vector& vec_r, const ModelConfig& config, double beta) {
  if (std::isnan(beta)) throw Error(ErrorKind::InvalidInput, "beta is NaN");
  if (std::isinf(beta)) return q_direction(vec_r, config, 0.0, -1.0);
  return q_direction(vec_r, config, 1.0, -beta);
}

QMinimum minimize_q(const Vector& vec_r, const ModelConfig& config) {
  return QProfile(config).minimize(vec_r);
}

double lr_stat(const Vector& vec_r, const ModelConfig& config) {
  const QMinimum m = minimize_q(vec_r, config);
  return std::max(0.0, q_beta(vec_r, config, config.beta0) - m.q_min);
}

StatBundle compute_statistics(const Vector& vec_r, const Model& model, const QProfile& profile) {
  const StatPair pair = apply(model.map, vec_r);
  StatBundle b;
  b.ar = ar_stat(pair.s);
  const RankPair r = rank_stats(pair.t, model.blocks);
  b.r1 = r.r1;
  b.r2 = r.r2;
  const QMinimum m = profile.minimize(vec_r);
  b.beta_min = m.beta_min;
  b.lr = std::max(0.0, b.ar - m.q_min);
  const LmPair lm = lm_stats(pair, model.blocks);
  b.lm1 = lm.lm1;
  b.lm = std::min(lm.lm, b.ar);
  b.qlr1 = qlr_stat(b.ar, b.lm, b.r1);
  b.qlr2 = qlr_stat(b.ar, b.lm, b.r2);
  return b;
}

}  // namespace weakiv
