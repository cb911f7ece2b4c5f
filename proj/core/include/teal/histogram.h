#ifndef TEAL_HISTOGRAM_H_
#define TEAL_HISTOGRAM_H_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace teal {

inline constexpr std::size_t kDefaultBinCount = 4096;

// Fixed-width histogram of |x| over [0, hi] with an overflow bucket for
// magnitudes above hi. Used as the offline calibration record from which
// sparsity thresholds are read back.
class ActivationHistogram {
 public:
  ActivationHistogram(std::string layer_id, std::size_t bin_count, double hi);

  // Chooses hi as 8x the root-mean-square of `first_batch` (the batch is not
  // recorded). Falls back to hi = 1 for an all-zero batch.
  static ActivationHistogram for_batch(std::string layer_id,
                                       std::span<const float> first_batch,
                                       std::size_t bin_count = kDefaultBinCount);

  const std::string& layer_id() const { return layer_id_; }
  std::size_t bin_count() const { return counts_.size(); }
  double lo() const { return 0.0; }
  double hi() const { return hi_; }
  double bin_width() const { return hi_ / static_cast<double>(counts_.size()); }
  std::span<const std::uint64_t> counts() const { return counts_; }
  std::uint64_t overflow_count() const { return overflow_; }
  std::uint64_t total() const { return total_; }

  // Adds |x_i| for every entry. Throws ValidationError (and records nothing)
  // if any entry is NaN.
  void record(std::span<const float> x);

  // Bin-wise addition; binning (count, hi) must match exactly.
  void merge(const ActivationHistogram& other);

  // Empirical CDF at t with linear interpolation inside a bin.
  double cdf(double t) const;

  bool operator==(const ActivationHistogram&) const = default;

 private:
  friend ActivationHistogram read_histogram(std::istream& in);

  std::string layer_id_;
  double hi_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t overflow_ = 0;
  std::uint64_t total_ = 0;
};

// Text format:
//   TEALH1 <layer_id> <bin_count> <lo> <hi> <total> <overflow>
//   <count>            (bin_count lines)
void write_histogram(std::ostream& out, const ActivationHistogram& h);
ActivationHistogram read_histogram(std::istream& in);

void save_histogram(const std::string& path, const ActivationHistogram& h);
ActivationHistogram load_histogram(const std::string& path);

}  // namespace teal

#endif  // TEAL_HISTOGRAM_H_
