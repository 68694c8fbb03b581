#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "weakiv/errors.hpp"
#include "weakiv/special.hpp"

using namespace weakiv;

TEST(NormalCdf, ReferenceValues) {
  EXPECT_EQ(normal_cdf(0.0), 0.5);
  EXPECT_NEAR(normal_cdf(1.0), 0.841344746068543, 1e-12);
  EXPECT_EQ(normal_cdf(INFINITY), 1.0);
  EXPECT_EQ(normal_cdf(-INFINITY), 0.0);
  const boost::math::normal z;
  for (double x = -12.0; x <= 12.0; x += 0.37) EXPECT_NEAR(normal_cdf(x), boost::math::cdf(z, x), 1e-12);
}

TEST(IncompleteGamma, MatchesBoost) {
  for (double a : {0.5, 1.0, 2.5, 5.0, 17.0, 120.0}) {
    for (double x : {0.0, 1e-6, 0.3, 1.0, 4.0, 9.9, 30.0, 150.0}) {
      EXPECT_NEAR(regularized_gamma_p(a, x), boost::math::gamma_p(a, x), 1e-12) << a << " " << x;
      EXPECT_NEAR(regularized_gamma_q(a, x), boost::math::gamma_q(a, x), 1e-12) << a << " " << x;
    }
  }
}

TEST(Chi2, CdfReferenceValues) {
  EXPECT_EQ(chi2_cdf(0.0, 3), 0.0);
  EXPECT_NEAR(chi2_cdf(1.0, 1), 0.682689492137086, 1e-12);
  EXPECT_NEAR(chi2_cdf(1.0, 1), 2.0 * normal_cdf(1.0) - 1.0, 1e-12);
  for (int k = 1; k <= 12; ++k) {
    const boost::math::chi_squared chi(k);
    for (double x = 0.05; x < 60.0; x *= 1.7) {
      EXPECT_NEAR(chi2_cdf(x, k), boost::math::cdf(chi, x), 1e-10);
      EXPECT_NEAR(chi2_sf(x, k), boost::math::cdf(boost::math::complement(chi, x)), 1e-12);
    }
  }
}

TEST(Chi2, QuantileReferenceValues) {
  EXPECT_NEAR(chi2_quantile(0.95, 4), 9.4877, 5e-5);
  EXPECT_NEAR(chi2_quantile(0.95, 4), 9.48772903678115, 1e-9);
  EXPECT_NEAR(chi2_quantile(0.95, 1), 3.84145882069412, 1e-9);
  for (int k : {1, 2, 4, 10, 30}) {
    const boost::math::chi_squared chi(k);
    for (double p : {1e-6, 0.01, 0.05, 0.5, 0.95, 0.99, 0.999, 1 - 1e-9}) {
      const double q = chi2_quantile(p, k);
      EXPECT_NEAR(chi2_cdf(q, k), p, 1e-8);
      EXPECT_NEAR(q, boost::math::quantile(chi, p), 1e-9 * (1.0 + q));
    }
  }
}

TEST(Chi2, QuantileRejectsOutOfRange) {
  for (double p : {0.0, 1.0, -0.1, 1.5, std::nan("")}) {
    try {
      chi2_quantile(p, 2);
      FAIL() << p;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
    }
  }
}
