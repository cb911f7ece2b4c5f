#ifndef TEAL_THEORY_H_
#define TEAL_THEORY_H_

#include <cstddef>
#include <span>
#include <vector>

#include "teal/rng.h"

namespace teal::theory {

// Closed-form error of magnitude sparsification for independent Gaussian
// activations X ~ N(0, sigma_x^2) and weights W ~ N(0, sigma_w^2).

// t_p with P(|X| <= t_p) = p. Returns +infinity for p == 1.
double gaussian_threshold(double p, double sigma_x);

// Var((X - s(X)) W) = sigma_x^2 sigma_w^2 [p - 2 t phi(t)], t = t_p/sigma_x.
double scalar_error_variance(double sigma_x, double sigma_w, double p);

// E||(x - s(x)) W^T||_2 for x in R^m, W in R^{n x m}.
double expected_error_norm(std::size_t m, std::size_t n, double sigma_x,
                           double sigma_w, double p);

// sqrt(p - 2 t phi(t)); independent of the variances and dimensions.
double relative_error_magnitude(double p);

// sqrt(p): the same ratio when a uniformly random fraction p is zeroed.
double relative_error_random(double p);

enum class MaskMode { kMagnitude, kRandom };

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

// Monte Carlo estimate of ||Y - Y_hat|| / ||Y|| over `trials` draws of a
// fresh x (length m) and W (n x m). Trial k uses rng.split(k), so the result
// does not depend on evaluation order.
// Same estimator over a grid of sparsities. Each trial's (x, W) draw (and,
// in random mode, its per-coordinate uniforms) is shared by every p, so the
// grid costs one sample generation per trial.
std::vector<McEstimate> mc_relative_error_sweep(
    std::size_t m, std::size_t n, std::span<const double> ps,
    std::size_t trials, MaskMode mode, const RngStream& rng,
    double sigma_x = 1.0, double sigma_w = 1.0);

McEstimate mc_relative_error(std::size_t m, std::size_t n, double p,
                             std::size_t trials, MaskMode mode,
                             const RngStream& rng, double sigma_x = 1.0,
                             double sigma_w = 1.0);

}  // namespace teal::theory

#endif  // TEAL_THEORY_H_
