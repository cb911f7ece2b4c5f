#include "teal/sparsifier.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "teal/error.h"

namespace teal {

Threshold::Threshold(double value) : value_(value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ValidationError("threshold must be finite and >= 0, got " +
                          std::to_string(value));
  }
}

Threshold Threshold::prune_all() {
  return Threshold(static_cast<double>(std::numeric_limits<float>::max()));
}

Threshold estimate_threshold(const ActivationHistogram& hist, double p) {
  if (hist.total() == 0) {
    throw ValidationError("estimate_threshold: histogram '" + hist.layer_id() +
                          "' is empty");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("estimate_threshold: p must lie in [0, 1]");
  }
  if (p == 0.0) return Threshold(0.0);
  if (p == 1.0) return Threshold(hist.hi());

  const double target = p * static_cast<double>(hist.total());
  const auto counts = hist.counts();
  const double width = hist.bin_width();
  double cum = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double c = static_cast<double>(counts[k]);
    if (c > 0.0 && cum + c >= target) {
      const double frac = std::clamp((target - cum) / c, 0.0, 1.0);
      return Threshold(std::min(hist.hi(), (k + frac) * width));
    }
    cum += c;
  }
  // Target lies in the overflow mass.
  return Threshold(hist.hi());
}

void record_activations(ActivationHistogram& hist, std::span<const float> x) {
  hist.record(x);
}

void sparsify_inplace(std::span<float> x, Threshold t) {
  for (float& v : x) {
    // Existing zeros keep their sign bit.
    if (v != 0.0f && t.prunes(v)) v = 0.0f;
  }
}

Vector sparsify(std::span<const float> x, Threshold t) {
  Vector out(x.begin(), x.end());
  sparsify_inplace(out, t);
  return out;
}

double realized_sparsity(std::span<const float> x, Threshold t) {
  if (x.empty()) throw ValidationError("realized_sparsity: empty vector");
  std::size_t pruned = 0;
  for (float v : x) pruned += t.prunes(v) ? 1 : 0;
  return static_cast<double>(pruned) / static_cast<double>(x.size());
}

DistributionFit fit_distribution(std::span<const float> samples, Family family) {
  if (samples.size() < 2) {
    throw ValidationError("fit_distribution: need at least 2 samples");
  }
  const double n = static_cast<double>(samples.size());
  if (family == Family::kGaussian) {
    double sum = 0.0;
    for (float v : samples) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (float v : samples) ss += (v - mean) * (v - mean);
    const double sigma = std::sqrt(ss / n);
    if (!(sigma > 0.0)) {
      throw ValidationError("fit_distribution: constant samples (zero scale)");
    }
    const double nll = 0.5 * std::log(2.0 * std::numbers::pi * sigma * sigma) + 0.5;
    return {Family::kGaussian, mean, sigma, nll};
  }

  std::vector<double> sorted(samples.begin(), samples.end());
  const std::size_t mid = sorted.size() / 2;
  std::nth_element(sorted.begin(), sorted.begin() + mid, sorted.end());
  double median = sorted[mid];
  if (sorted.size() % 2 == 0) {
    const double lower = *std::max_element(sorted.begin(), sorted.begin() + mid);
    median = 0.5 * (median + lower);
  }
  double abs_dev = 0.0;
  for (float v : samples) abs_dev += std::abs(v - median);
  const double b = abs_dev / n;
  if (!(b > 0.0)) {
    throw ValidationError("fit_distribution: constant samples (zero scale)");
  }
  return {Family::kLaplace, median, b, std::log(2.0 * b) + 1.0};
}

std::vector<double> batch_mean_magnitudes(const Matrix& batch) {
  if (batch.rows() == 0) throw ValidationError("batch must have B >= 1 rows");
  std::vector<double> mean(batch.cols(), 0.0);
  for (std::size_t b = 0; b < batch.rows(); ++b) {
    for (std::size_t i = 0; i < batch.cols(); ++i) {
      mean[i] += std::abs(static_cast<double>(batch(b, i)));
    }
  }
  const double rows = static_cast<double>(batch.rows());
  for (double& v : mean) v /= rows;
  return mean;
}

BatchedSparsifyResult sparsify_batched(const Matrix& batch, Threshold t) {
  const std::vector<double> mean = batch_mean_magnitudes(batch);
  BatchedSparsifyResult result{batch, std::vector<bool>(batch.cols(), false)};
  for (std::size_t i = 0; i < batch.cols(); ++i) {
    if (mean[i] > t.value()) continue;
    result.mask[i] = true;
    for (std::size_t b = 0; b < batch.rows(); ++b) {
      float& v = result.batch(b, i);
      if (v != 0.0f) v = 0.0f;
    }
  }
  return result;
}

BatchedSparsifyResult sparsify_batched(std::span<const Vector> rows,
                                       Threshold t) {
  if (rows.empty()) throw ValidationError("batch must have B >= 1 rows");
  const std::size_t m = rows.front().size();
  Matrix batch(rows.size(), m);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    if (rows[b].size() != m) {
      throw ValidationError("ragged batch: row " + std::to_string(b) +
                            " has length " + std::to_string(rows[b].size()) +
                            ", expected " + std::to_string(m));
    }
    std::copy(rows[b].begin(), rows[b].end(), batch.row(b).begin());
  }
  return sparsify_batched(batch, t);
}

}  // namespace teal
