#include "teal/normal.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "teal/error.h"

namespace teal::normal {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kTwoOverSqrtPi = 2.0 * std::numbers::inv_sqrtpi;

// erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (2n+1)!!
// All terms positive, so no cancellation for moderate x.
double erf_series(double x) {
  const double x2 = x * x;
  double term = x;
  double sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= 2.0 * x2 / (2.0 * n + 1.0);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return kTwoOverSqrtPi * std::exp(-x2) * sum;
}

// erfc(x) for x > 0 via the continued fraction
//   erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
double erfc_continued_fraction(double x) {
  constexpr double kTiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    const double a = 0.5 * k;
    d = x + a * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = x + a / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x * x) * std::numbers::inv_sqrtpi / f;
}

// Below this the series is used; above it the continued fraction, which
// avoids the 1 - erf cancellation in the tail.
constexpr double kFractionCutoff = 2.0;

}  // namespace

double erf(double x) {
  if (std::isnan(x)) return x;
  const double ax = std::abs(x);
  double r;
  if (ax < kFractionCutoff) {
    r = erf_series(ax);
  } else {
    r = 1.0 - erfc_continued_fraction(ax);
  }
  return x < 0 ? -r : r;
}

double erfc(double x) {
  if (std::isnan(x)) return x;
  if (x >= kFractionCutoff) return erfc_continued_fraction(x);
  return 1.0 - erf(x);
}

double pdf(double t) {
  return std::numbers::inv_sqrtpi / kSqrt2 * std::exp(-0.5 * t * t);
}

double cdf(double t) { return 0.5 * erfc(-t / kSqrt2); }

double abs_cdf(double t) {
  if (t <= 0.0) return 0.0;
  return erf(t / kSqrt2);
}

double abs_quantile(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("sparsity p must lie in [0, 1]");
  }
  if (p == 0.0) return 0.0;
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  double lo = 0.0;
  double hi = 1.0;
  while (abs_cdf(hi) < p) hi *= 2.0;
  for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (abs_cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace teal::normal
