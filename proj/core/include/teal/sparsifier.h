#ifndef TEAL_SPARSIFIER_H_
#define TEAL_SPARSIFIER_H_

#include <cmath>
#include <span>
#include <vector>

#include "teal/histogram.h"
#include "teal/tensor.h"

namespace teal {

// Magnitude cutoff: entries with |x| <= value are pruned.
class Threshold {
 public:
  constexpr Threshold() = default;
  explicit Threshold(double value);

  // Finite threshold above every representable float magnitude.
  static Threshold prune_all();

  double value() const { return value_; }
  bool prunes(float x) const {
    return std::abs(static_cast<double>(x)) <= value_;
  }

  auto operator<=>(const Threshold&) const = default;

 private:
  double value_ = 0.0;
};

// Smallest t with interpolated empirical CDF(t) >= p. p = 0 gives 0 and
// p = 1 gives hi. Throws on an empty histogram or p outside [0, 1].
Threshold estimate_threshold(const ActivationHistogram& hist, double p);

void record_activations(ActivationHistogram& hist, std::span<const float> x);

Vector sparsify(std::span<const float> x, Threshold t);
void sparsify_inplace(std::span<float> x, Threshold t);

// Fraction of entries with |x_i| <= t. Throws on empty input.
double realized_sparsity(std::span<const float> x, Threshold t);

enum class Family { kGaussian, kLaplace };

struct DistributionFit {
  Family family;
  double location;
  double scale;
  // Mean negative log-likelihood per sample at the fitted parameters.
  double neg_log_likelihood;
};

// Maximum-likelihood fit: Gaussian (mean, population std) or Laplace
// (median, mean absolute deviation from the median).
DistributionFit fit_distribution(std::span<const float> samples, Family family);

struct BatchedSparsifyResult {
  Matrix batch;
  // true where the column is pruned in every row
  std::vector<bool> mask;
};

// Per-column mean magnitude across the batch rows (B x m, row-major).
std::vector<double> batch_mean_magnitudes(const Matrix& batch);

// Prunes column i of every row when (1/B) sum_b |X_bi| <= t.
BatchedSparsifyResult sparsify_batched(const Matrix& batch, Threshold t);
// Rows given separately; throws ValidationError on an empty or ragged batch.
BatchedSparsifyResult sparsify_batched(std::span<const Vector> rows, Threshold t);

}  // namespace teal

#endif  // TEAL_SPARSIFIER_H_
