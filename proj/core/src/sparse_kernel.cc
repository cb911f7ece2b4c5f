#include "teal/sparse_kernel.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "teal/error.h"
#include "teal/theory.h"

namespace teal {

namespace {

template <bool kCount>
void gemv_columns(std::span<const float> x, Threshold t, const Matrix& w,
                  float* y, GemvCounters* counters) {
  const std::size_t n = w.rows();
  const float* wd = w.data().data();
  const double cut = t.value();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float xi = x[i];
    if (std::abs(static_cast<double>(xi)) <= cut) continue;
    if constexpr (kCount) {
      counters->macs += n;
      ++counters->columns_loaded;
    }
    const float* column = wd + i * n;
    for (std::size_t j = 0; j < n; ++j) y[j] += xi * column[j];
  }
}

void check_gemv_args(std::span<const float> x, const Matrix& w) {
  if (w.layout() != Layout::kColMajor) {
    throw ValidationError("sparse_gemv: weights must be ColMajor");
  }
  if (x.size() != w.cols()) {
    throw ValidationError("sparse_gemv: x has length " +
                          std::to_string(x.size()) + " but W is " +
                          std::to_string(w.rows()) + "x" +
                          std::to_string(w.cols()));
  }
}

double checksum(std::span<const float> y) {
  double s = 0.0;
  for (float v : y) s += v;
  return s;
}

std::int64_t median_of(std::vector<std::int64_t> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2;
}

// Smallest observable non-zero step of the steady clock.
std::int64_t clock_resolution_ns() {
  using Clock = std::chrono::steady_clock;
  std::int64_t best = INT64_MAX;
  for (int k = 0; k < 16; ++k) {
    const auto a = Clock::now();
    auto b = Clock::now();
    while (b == a) b = Clock::now();
    best = std::min<std::int64_t>(
        best, std::chrono::duration_cast<std::chrono::nanoseconds>(b - a).count());
  }
  return std::max<std::int64_t>(best, 1);
}

// Runs `run` warmup + reps times; only the call itself is timed. `check`
// sees every timed output afterwards.
template <typename Run, typename Check>
std::vector<std::int64_t> time_reps(std::size_t warmup, std::size_t reps,
                                    Run&& run, Check&& check) {
  using Clock = std::chrono::steady_clock;
  for (std::size_t k = 0; k < warmup; ++k) check(run());
  std::vector<std::int64_t> ns(reps);
  for (std::size_t k = 0; k < reps; ++k) {
    const auto start = Clock::now();
    const Vector y = run();
    const auto stop = Clock::now();
    ns[k] = std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start)
                .count();
    check(y);
  }
  return ns;
}

Threshold gaussian_cut(double s) {
  const double t = theory::gaussian_threshold(s, 1.0);
  return std::isfinite(t) ? Threshold(t) : Threshold::prune_all();
}

}  // namespace

Vector sparse_gemv(std::span<const float> x, Threshold t, const Matrix& w) {
  check_gemv_args(x, w);
  Vector y(w.rows(), 0.0f);
  gemv_columns<false>(x, t, w, y.data(), nullptr);
  return y;
}

Vector sparse_gemv(std::span<const float> x, Threshold t, const Matrix& w,
                   GemvCounters& counters) {
  check_gemv_args(x, w);
  Vector y(w.rows(), 0.0f);
  gemv_columns<true>(x, t, w, y.data(), &counters);
  return y;
}

Matrix sparse_matmul_rows(const Matrix& x, Threshold t, const Matrix& w) {
  if (x.layout() != Layout::kRowMajor) {
    throw ValidationError("sparse_matmul_rows: activations must be RowMajor");
  }
  if (x.rows() > 0) check_gemv_args(x.row(0), w);
  Matrix y(x.rows(), w.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    gemv_columns<false>(x.row(r), t, w, y.row(r).data(), nullptr);
  }
  return y;
}

TrafficReport traffic_model(std::uint64_t n, std::uint64_t m,
                            double realized_sparsity,
                            std::uint64_t bytes_per_element) {
  if (!(realized_sparsity >= 0.0 && realized_sparsity <= 1.0)) {
    throw ValidationError("traffic_model: sparsity must lie in [0, 1]");
  }
  const std::uint64_t dense = n * m * bytes_per_element;
  const double kept = (1.0 - realized_sparsity) * static_cast<double>(dense);
  return {dense, static_cast<std::uint64_t>(std::llround(kept)),
          m * bytes_per_element, realized_sparsity};
}

TrafficReport traffic_from_columns(std::uint64_t n, std::uint64_t m,
                                   std::uint64_t pruned_columns,
                                   std::uint64_t bytes_per_element) {
  if (pruned_columns > m) {
    throw ValidationError("traffic_from_columns: pruned columns exceed m");
  }
  return {n * m * bytes_per_element,
          n * (m - pruned_columns) * bytes_per_element, m * bytes_per_element,
          m ? static_cast<double>(pruned_columns) / static_cast<double>(m) : 0.0};
}

BenchResult bench_gemv(const BenchConfig& config) {
  if (config.reps < 10) throw ValidationError("bench_gemv: reps must be >= 10");
  if (config.warmup < 3) throw ValidationError("bench_gemv: warmup must be >= 3");
  if (config.rows == 0 || config.cols == 0) {
    throw ValidationError("bench_gemv: empty shape");
  }
  RngStream rng(config.seed);
  RngStream w_rng = rng.split(0);
  const Matrix w = sample_gaussian_matrix(w_rng, config.rows, config.cols,
                                          1.0 / std::sqrt(double(config.cols)),
                                          Layout::kColMajor);
  RngStream x_rng = rng.split(1);
  const Vector x = sample_gaussian(x_rng, config.cols, 1.0);
  const std::int64_t resolution = clock_resolution_ns();

  BenchResult result;
  result.rows = config.rows;
  result.cols = config.cols;

  const auto dense_ns = time_reps(
      config.warmup, config.reps, [&] { return matmul_dense(x, w); },
      [](const Vector&) {});
  result.dense_median_ns = median_of(dense_ns);
  result.dense_min_ns = *std::min_element(dense_ns.begin(), dense_ns.end());

  for (double s : config.sparsities) {
    const Threshold t = gaussian_cut(s);
    const Vector oracle = matmul_dense(sparsify(x, t), w);
    const double expected = checksum(oracle);
    double scale = 0.0;
    for (float v : oracle) scale += std::abs(v);

    std::uint64_t pruned = 0;
    for (float v : x) pruned += t.prunes(v) ? 1 : 0;

    BenchPoint point;
    point.target_sparsity = s;
    point.threshold = t.value();
    point.reps = config.reps;
    point.checksum = expected;
    point.traffic = traffic_from_columns(config.rows, config.cols, pruned);
    point.realized_sparsity = point.traffic.realized_sparsity;

    const auto ns = time_reps(
        config.warmup, config.reps, [&] { return sparse_gemv(x, t, w); },
        [&](const Vector& y) {
          if (std::abs(checksum(y) - expected) > 1e-5 * std::max(scale, 1.0)) {
            throw NumericError("bench_gemv: checksum mismatch at s=" +
                               std::to_string(s));
          }
        });
    point.median_ns = median_of(ns);
    point.min_ns = *std::min_element(ns.begin(), ns.end());
    if (pruned < config.cols && point.min_ns < 10 * resolution) {
      throw ValidationError(
          "bench_gemv: timer resolution (" + std::to_string(resolution) +
          " ns) too coarse for this shape; use a larger matrix");
    }
    result.points.push_back(point);
  }
  return result;
}

}  // namespace teal
