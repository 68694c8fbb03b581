#include "weakiv/special.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "weakiv/errors.hpp"

namespace weakiv {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxIter = 10000;

// P(a, x) by its power series; converges quickly for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxIter; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Q(a, x) by the Legendre continued fraction (modified Lentz); x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_gamma_args(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0) || std::isnan(x)) {
    throw Error(ErrorKind::InvalidInput, "incomplete gamma requires a > 0 and x >= 0");
  }
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double regularized_gamma_p(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double chi2_cdf(double x, int dof) {
  if (dof < 1) throw Error(ErrorKind::InvalidInput, "chi-square dof must be >= 1");
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_sf(double x, int dof) {
  if (dof < 1) throw Error(ErrorKind::InvalidInput, "chi-square dof must be >= 1");
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(0.5 * dof, 0.5 * x);
}

double chi2_quantile(double p, int dof) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidInput, "quantile level must lie in (0, 1)");
  if (dof < 1) throw Error(ErrorKind::InvalidInput, "chi-square dof must be >= 1");

  // Upper levels work on the survival function, where 1 - p is exact.
  const bool upper = p > 0.5;
  const double tail = 1.0 - p;
  auto excess = [&](double x) { return upper ? tail - chi2_sf(x, dof) : chi2_cdf(x, dof) - p; };

  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(dof));
  while (excess(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }

  // Newton, falling back to bisection when a step leaves the bracket.
  const double half = 0.5 * dof;
  const double log_norm = -half * std::log(2.0) - std::lgamma(half);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = excess(x);
    if (f == 0.0) return x;
    if (f > 0.0) hi = x; else lo = x;
    const double density = std::exp(log_norm + (half - 1.0) * std::log(x) - 0.5 * x);
    double next = density > 0.0 ? x - f / density : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-13 * std::max(1.0, x) || hi - lo <= 1e-14 * std::max(1.0, x)) {
      return next;
    }
    x = next;
  }
  return x;
}

}  // namespace weakiv
