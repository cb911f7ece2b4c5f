#include "teal/theory.h"

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "teal/error.h"
#include "teal/normal.h"
#include "teal/tensor.h"

namespace teal::theory {

namespace {

void check_p(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("sparsity p must lie in [0, 1]");
  }
}

// p - 2 t phi(t) for the standardized threshold t; clamped at 0 against
// rounding near p = 0.
double pruned_energy_fraction(double p) {
  check_p(p);
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  const double t = normal::abs_quantile(p);
  return std::max(0.0, p - 2.0 * t * normal::pdf(t));
}

double l2_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

}  // namespace

double gaussian_threshold(double p, double sigma_x) {
  check_p(p);
  if (!(sigma_x > 0.0)) throw ValidationError("sigma_x must be > 0");
  return sigma_x * normal::abs_quantile(p);
}

double scalar_error_variance(double sigma_x, double sigma_w, double p) {
  if (!(sigma_x > 0.0) || !(sigma_w > 0.0)) {
    throw ValidationError("sigmas must be > 0");
  }
  return sigma_x * sigma_x * sigma_w * sigma_w * pruned_energy_fraction(p);
}

double expected_error_norm(std::size_t m, std::size_t n, double sigma_x,
                           double sigma_w, double p) {
  if (m == 0 || n == 0) throw ValidationError("m and n must be >= 1");
  return std::sqrt(static_cast<double>(m) * static_cast<double>(n) *
                   scalar_error_variance(sigma_x, sigma_w, p));
}

double relative_error_magnitude(double p) {
  return std::sqrt(pruned_energy_fraction(p));
}

double relative_error_random(double p) {
  check_p(p);
  return std::sqrt(p);
}

std::vector<McEstimate> mc_relative_error_sweep(
    std::size_t m, std::size_t n, std::span<const double> ps,
    std::size_t trials, MaskMode mode, const RngStream& rng, double sigma_x,
    double sigma_w) {
  for (double p : ps) check_p(p);
  if (trials < 2) throw ValidationError("mc_relative_error: trials must be >= 2");
  if (m == 0 || n == 0) throw ValidationError("m and n must be >= 1");
  if (!(sigma_x > 0.0) || !(sigma_w > 0.0)) {
    throw ValidationError("sigmas must be > 0");
  }
  std::vector<double> cuts;
  for (double p : ps) cuts.push_back(gaussian_threshold(p, sigma_x));

  // ratios[j * trials + k]
  std::vector<double> ratios(ps.size() * trials);
  Vector residual(m);
  std::vector<double> uniforms;
  for (std::size_t k = 0; k < trials; ++k) {
    RngStream trial_rng = rng.split(k);
    const Vector x = sample_gaussian(trial_rng, m, sigma_x);
    // Entries are i.i.d., so filling the column-major buffer directly gives
    // the same distribution as drawing in logical order.
    const Matrix w(n, m, Layout::kColMajor,
                   sample_gaussian(trial_rng, n * m, sigma_w));
    if (mode == MaskMode::kRandom) {
      uniforms.resize(m);
      for (double& u : uniforms) u = trial_rng.next_uniform();
    }
    const double ref = l2_norm(matmul_dense(x, w));
    for (std::size_t j = 0; j < ps.size(); ++j) {
      // Residual r = x - s(x) carries exactly the pruned entries, so
      // Y - Y_hat = r W^T without cancellation.
      for (std::size_t i = 0; i < m; ++i) {
        const bool pruned = mode == MaskMode::kMagnitude
                                ? std::abs(static_cast<double>(x[i])) <= cuts[j]
                                : uniforms[i] < ps[j];
        residual[i] = pruned ? x[i] : 0.0f;
      }
      const double err = l2_norm(matmul_dense(residual, w));
      ratios[j * trials + k] = ref > 0.0 ? err / ref : 0.0;
    }
  }

  std::vector<McEstimate> out(ps.size());
  for (std::size_t j = 0; j < ps.size(); ++j) {
    const std::span<const double> r(ratios.data() + j * trials, trials);
    double sum = 0.0;
    for (double v : r) sum += v;
    const double mean = sum / static_cast<double>(trials);
    double ss = 0.0;
    for (double v : r) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(trials - 1);
    out[j] = {mean, std::sqrt(var / static_cast<double>(trials))};
  }
  return out;
}

McEstimate mc_relative_error(std::size_t m, std::size_t n, double p,
                             std::size_t trials, MaskMode mode,
                             const RngStream& rng, double sigma_x,
                             double sigma_w) {
  const double ps[] = {p};
  return mc_relative_error_sweep(m, n, ps, trials, mode, rng, sigma_x,
                                 sigma_w)[0];
}

}  // namespace teal::theory
