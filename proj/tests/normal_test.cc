#include <gtest/gtest.h>

#include <cmath>

#include "teal/error.h"
#include "teal/normal.h"

namespace teal::normal {
namespace {

// Oracle: bisection on the C library erf, independent of the series and
// continued fraction under test.
double oracle_abs_quantile(double p) {
  double lo = 0.0, hi = 40.0;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::erf(mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TEST(Erf, MatchesLibraryAcrossRange) {
  for (double x = -7.0; x <= 7.0; x += 0.01) {
    EXPECT_NEAR(erf(x), std::erf(x), 1e-14) << x;
    const double rel = std::abs(erfc(x) - std::erfc(x)) / std::erfc(x);
    EXPECT_LE(rel, 1e-12) << x;
  }
}

TEST(Normal, PdfCdfIdentities) {
  EXPECT_NEAR(pdf(0.0), 0.3989422804014327, 1e-16);
  EXPECT_NEAR(cdf(0.0), 0.5, 1e-16);
  EXPECT_NEAR(cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(abs_cdf(1.0), 0.6826894921370859, 1e-12);
  EXPECT_EQ(abs_cdf(-1.0), 0.0);
}

TEST(Normal, AbsQuantileMatchesOracle) {
  for (double p = 0.01; p < 1.0; p += 0.01) {
    EXPECT_NEAR(abs_quantile(p), oracle_abs_quantile(p), 1e-11) << p;
  }
  EXPECT_EQ(abs_quantile(0.0), 0.0);
  EXPECT_TRUE(std::isinf(abs_quantile(1.0)));
  EXPECT_THROW(abs_quantile(-0.1), ValidationError);
  EXPECT_THROW(abs_quantile(1.5), ValidationError);
}

}  // namespace
}  // namespace teal::normal
