#pragma once

namespace weakiv {

/// Standard normal CDF.
double normal_cdf(double x);

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);
/// Upper complement Q(a, x) = 1 - P(a, x), computed without cancellation.
double regularized_gamma_q(double a, double x);

double chi2_cdf(double x, int dof);
double chi2_sf(double x, int dof);

/// Inverse of chi2_cdf; p in (0, 1). Throws InvalidInput otherwise.
double chi2_quantile(double p, int dof);

}  // namespace weakiv
