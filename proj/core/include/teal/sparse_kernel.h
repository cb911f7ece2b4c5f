#ifndef TEAL_SPARSE_KERNEL_H_
#define TEAL_SPARSE_KERNEL_H_

#include <cstdint>
#include <span>
#include <vector>

#include "teal/sparsifier.h"
#include "teal/tensor.h"

namespace teal {

// Work counters for the instrumented kernel path.
struct GemvCounters {
  std::uint64_t macs = 0;
  std::uint64_t columns_loaded = 0;
};

// y = s_t(x) W^T over a column-major n x m W. Column i is read only when
// |x_i| > t; the comparison happens inside the column loop, no mask is
// materialized. Throws ValidationError for a row-major W or length mismatch.
Vector sparse_gemv(std::span<const float> x, Threshold t, const Matrix& w);
Vector sparse_gemv(std::span<const float> x, Threshold t, const Matrix& w,
                   GemvCounters& counters);

// sparse_gemv applied to every row of a row-major activation matrix.
Matrix sparse_matmul_rows(const Matrix& x, Threshold t, const Matrix& w);

struct TrafficReport {
  std::uint64_t weight_bytes_dense = 0;
  std::uint64_t weight_bytes_sparse = 0;
  std::uint64_t activation_bytes = 0;
  double realized_sparsity = 0.0;
};

// Column-skip byte model: a pruned input skips one full weight column.
TrafficReport traffic_model(std::uint64_t n, std::uint64_t m,
                            double realized_sparsity,
                            std::uint64_t bytes_per_element = 4);
// Same model from an exact count of pruned columns.
TrafficReport traffic_from_columns(std::uint64_t n, std::uint64_t m,
                                   std::uint64_t pruned_columns,
                                   std::uint64_t bytes_per_element = 4);

struct BenchConfig {
  std::size_t rows = 4096;
  std::size_t cols = 14336;
  std::vector<double> sparsities = {0.0, 0.25, 0.5, 0.9};
  std::size_t reps = 100;
  std::size_t warmup = 10;
  std::uint64_t seed = 0;
};

struct BenchPoint {
  double target_sparsity = 0.0;
  double realized_sparsity = 0.0;
  double threshold = 0.0;
  std::int64_t median_ns = 0;
  std::int64_t min_ns = 0;
  std::size_t reps = 0;
  double checksum = 0.0;
  TrafficReport traffic;
};

struct BenchResult {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::int64_t dense_median_ns = 0;
  std::int64_t dense_min_ns = 0;
  std::vector<BenchPoint> points;

  double speedup(const BenchPoint& p) const {
    return p.median_ns > 0 ? static_cast<double>(dense_median_ns) / p.median_ns
                           : 0.0;
  }
};

// Times sparse_gemv at each grid sparsity against matmul_dense on the same
// column-major weights. x is N(0, 1) and t the exact Gaussian |x| quantile.
// Every timed output is checked against matmul_dense(sparsify(x, t), W).
// Requires reps >= 10 and warmup >= 3; throws if the clock cannot resolve
// a single call.
BenchResult bench_gemv(const BenchConfig& config);

}  // namespace teal

#endif  // TEAL_SPARSE_KERNEL_H_
