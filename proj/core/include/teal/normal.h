#ifndef TEAL_NORMAL_H_
#define TEAL_NORMAL_H_

namespace teal::normal {

// Error function and complement, accurate to ~1e-15 absolute. Series for
// |x| < 3, Lentz continued fraction for erfc beyond.
double erf(double x);
double erfc(double x);

// Standard normal density and distribution function.
double pdf(double t);
double cdf(double t);

// P(|Z| <= t) for Z ~ N(0, 1).
double abs_cdf(double t);

// Smallest t >= 0 with P(|Z| <= t) = p, by bisection to 1e-12. Returns
// +infinity for p == 1.
double abs_quantile(double p);

}  // namespace teal::normal

#endif  // TEAL_NORMAL_H_
