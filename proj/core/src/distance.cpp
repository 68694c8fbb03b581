#include "weakiv/distance.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "weakiv/errors.hpp"
#include "weakiv/special.hpp"

namespace weakiv {

double delta_squared(const SeparationSpec& spec, const RotatedBlocks& blocks) {
  const Eigen::Index k = blocks.k();
  if (spec.mu_i.size() != k || spec.mu_j.size() != k) {
    throw Error(ErrorKind::DimensionMismatch, "means must have k entries");
  }
  const Vector diff = spec.mu_j - spec.mu_i;
  const double value = spec.delta * spec.delta * spec.mu_j.dot(blocks.sigma_up11 * spec.mu_j) +
                       2.0 * spec.delta * diff.dot(blocks.sigma_up21 * spec.mu_j) +
                       diff.dot(blocks.sigma_up22 * diff);
  return std::max(0.0, value);
}

double tv_gaussian(double delta) {
  if (!(delta >= 0.0)) throw Error(ErrorKind::InvalidInput, "delta must be nonnegative");
  // 2 Phi(x) - 1 = erf(x / sqrt 2), accurate near zero.
  return std::erf(delta / (2.0 * std::numbers::sqrt2));
}

double tv_gaussian_chi2(double delta) {
  if (!(delta >= 0.0)) throw Error(ErrorKind::InvalidInput, "delta must be nonnegative");
  return chi2_cdf(delta * delta / 4.0, 1);
}

double hull_tv_upper_bound(double d) {
  if (!(d >= 0.0)) throw Error(ErrorKind::InvalidInput, "d must be nonnegative");
  return chi2_cdf(d / 4.0, 1);
}

double clr_power_lower_bound(double d, int k, double alpha) {
  if (!(d >= 0.0)) throw Error(ErrorKind::InvalidInput, "d must be nonnegative");
  if (k < 1) throw Error(ErrorKind::InvalidInput, "k must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidInput, "alpha must lie in (0, 1)");
  const double excess = std::max(0.0, d - chi2_quantile(1.0 - alpha, k));
  const double kk = static_cast<double>(k);
  const double last = d > 0.0 ? 2.0 * std::exp(-excess * excess / (128.0 * d)) : 0.0;
  const double value = 1.0 - 2.0 * kk * std::exp(-excess / (4.0 * kk)) - 2.0 * kk * std::exp(-excess / (8.0 * kk)) - last;
  return std::max(0.0, value);
}

double min_delta_constrained(double d_floor) {
  if (!(d_floor > 0.0)) throw Error(ErrorKind::InvalidInput, "d_floor must be positive");
  return d_floor;
}

}  // namespace weakiv
