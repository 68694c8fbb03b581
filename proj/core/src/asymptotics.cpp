#include "weakiv/asymptotics.hpp"

#include <cmath>

#include "weakiv/errors.hpp"

namespace weakiv {
namespace {

constexpr double kDegenerate = 1e-12;

void require_size(const Vector& v, Eigen::Index k, const char* what) {
  if (v.size() != k) throw Error(ErrorKind::DimensionMismatch, std::string(what) + " must have k entries");
}

Vector scaled_pi(const AsymptoticInputs& inputs, Eigen::Index k) {
  require_size(inputs.pi, k, "pi");
  if (inputs.d_mat.rows() != k || inputs.d_mat.cols() != k) {
    throw Error(ErrorKind::DimensionMismatch, "D must be k x k");
  }
  require_spd(inputs.d_mat, "D");
  return sym_sqrt(inputs.d_mat) * inputs.pi;
}

struct VarianceParts {
  Vector v;      // Sigma11^{-1/2} D^{1/2} pi
  Vector gamma;  // Sigma11^{-1/2} (I - Delta Sigma21 Sigma11^{-1}) D^{1/2} pi
  Matrix b;      // Sigma11^{-1/2} (Sigma^22)^{-1} Sigma11^{-1/2}
};

VarianceParts variance_parts(double delta, const AsymptoticInputs& inputs, const RotatedBlocks& blocks) {
  const Eigen::Index k = blocks.k();
  const Vector dp = scaled_pi(inputs, k);
  VarianceParts p;
  p.v = blocks.sigma11_inv_sqrt * dp;
  p.gamma = blocks.sigma11_inv_sqrt * (dp - delta * (blocks.sigma21 * (blocks.sigma11_inv * dp)));
  if (!(p.gamma.norm() > kDegenerate)) throw Error(ErrorKind::DegenerateGamma, "gamma vanishes");
  p.b = blocks.sigma11_inv_sqrt * spd_inverse(blocks.sigma_up22) * blocks.sigma11_inv_sqrt;
  return p;
}

}  // namespace

double lm_la_drift(const AsymptoticInputs& inputs, const RotatedBlocks& blocks) {
  const Vector dp = scaled_pi(inputs, blocks.k());
  return inputs.h_delta * std::sqrt(dp.dot(blocks.sigma11_inv * dp));
}

double lm_fa_drift(double delta, const Vector& mu, const RotatedBlocks& blocks) {
  require_size(mu, blocks.k(), "mu");
  const Vector w = blocks.sigma11_inv * mu;
  const double numerator = delta * mu.dot(w) - delta * delta * w.dot(blocks.sigma21 * w);
  const Vector u = mu - delta * (blocks.sigma21 * w);
  const double denominator = u.dot(blocks.sigma11_inv * u);
  if (!(denominator > kDegenerate)) throw Error(ErrorKind::DegenerateDenominator, "drift denominator vanishes");
  return numerator / std::sqrt(denominator);
}

VarianceComponents lm_fa_variance_components(double delta, const AsymptoticInputs& inputs,
                                             const RotatedBlocks& blocks) {
  const VarianceParts p = variance_parts(delta, inputs, blocks);
  const double scale = delta * delta / p.gamma.squaredNorm();
  const Vector g_hat = p.gamma.normalized();
  const Vector mv = p.v - g_hat * g_hat.dot(p.v);
  const double full = mv.dot(p.b * mv);
  const double plain = p.v.dot(p.b * p.v);
  return {1.0 + scale * plain, scale * (full - plain)};
}

double lm_fa_variance(double delta, const AsymptoticInputs& inputs, const RotatedBlocks& blocks) {
  const VarianceParts p = variance_parts(delta, inputs, blocks);
  const Vector g_hat = p.gamma.normalized();
  const Vector mv = p.v - g_hat * g_hat.dot(p.v);
  return 1.0 + delta * delta / p.gamma.squaredNorm() * mv.dot(p.b * mv);
}

double lm_id_limit(const Vector& mu, const RotatedBlocks& blocks) {
  require_size(mu, blocks.k(), "mu");
  const Vector w = blocks.sigma11_inv * mu;
  const Vector u = blocks.sigma21 * w;
  const double denominator = u.dot(blocks.sigma11_inv * u);
  if (!(denominator > kDegenerate)) throw Error(ErrorKind::DegenerateDenominator, "Sigma21 Sigma11^{-1} mu vanishes");
  return mu.dot(w) / std::sqrt(denominator);
}

}  // namespace weakiv
