#include "teal/histogram.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "teal/error.h"

namespace teal {

ActivationHistogram::ActivationHistogram(std::string layer_id,
                                         std::size_t bin_count, double hi)
    : layer_id_(std::move(layer_id)), hi_(hi), counts_(bin_count, 0) {
  if (bin_count == 0) throw ValidationError("histogram needs at least one bin");
  if (!(hi > 0.0) || !std::isfinite(hi)) {
    throw ValidationError("histogram upper bound must be finite and > 0");
  }
  if (layer_id_.empty() ||
      layer_id_.find_first_of(" \t\n") != std::string::npos) {
    throw ValidationError("histogram layer id must be a non-empty token");
  }
}

ActivationHistogram ActivationHistogram::for_batch(
    std::string layer_id, std::span<const float> first_batch,
    std::size_t bin_count) {
  double sum_sq = 0.0;
  for (float v : first_batch) sum_sq += static_cast<double>(v) * v;
  const double rms =
      first_batch.empty() ? 0.0 : std::sqrt(sum_sq / first_batch.size());
  const double hi = rms > 0.0 && std::isfinite(rms) ? 8.0 * rms : 1.0;
  return ActivationHistogram(std::move(layer_id), bin_count, hi);
}

void ActivationHistogram::record(std::span<const float> x) {
  for (float v : x) {
    if (std::isnan(v)) {
      throw ValidationError("histogram '" + layer_id_ + "': NaN activation");
    }
  }
  const double scale = static_cast<double>(counts_.size()) / hi_;
  const std::size_t last = counts_.size() - 1;
  for (float v : x) {
    const double mag = std::abs(static_cast<double>(v));
    if (mag > hi_) {
      ++overflow_;
    } else {
      const auto bin = static_cast<std::size_t>(mag * scale);
      ++counts_[bin > last ? last : bin];
    }
  }
  total_ += x.size();
}

void ActivationHistogram::merge(const ActivationHistogram& other) {
  if (other.counts_.size() != counts_.size() || other.hi_ != hi_) {
    throw ValidationError("cannot merge histograms with different binning");
  }
  for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
  overflow_ += other.overflow_;
  total_ += other.total_;
}

double ActivationHistogram::cdf(double t) const {
  if (total_ == 0) throw ValidationError("cdf of empty histogram");
  if (t < 0.0) return 0.0;
  if (t >= hi_) {
    return static_cast<double>(total_ - overflow_) / static_cast<double>(total_);
  }
  const double pos = t / bin_width();
  const auto bin = static_cast<std::size_t>(pos);
  double below = 0.0;
  for (std::size_t k = 0; k < bin && k < counts_.size(); ++k) below += counts_[k];
  if (bin < counts_.size()) {
    below += (pos - static_cast<double>(bin)) * counts_[bin];
  }
  return below / static_cast<double>(total_);
}

void write_histogram(std::ostream& out, const ActivationHistogram& h) {
  char lo_buf[40], hi_buf[40];
  std::snprintf(lo_buf, sizeof lo_buf, "%.17g", h.lo());
  std::snprintf(hi_buf, sizeof hi_buf, "%.17g", h.hi());
  out << "TEALH1 " << h.layer_id() << ' ' << h.bin_count() << ' ' << lo_buf
      << ' ' << hi_buf << ' ' << h.total() << ' ' << h.overflow_count() << '\n';
  for (std::uint64_t c : h.counts()) out << c << '\n';
}

ActivationHistogram read_histogram(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("missing TEALH1 header");
  std::istringstream header(line);
  std::string magic, layer;
  std::size_t bins = 0;
  double lo = -1.0, hi = 0.0;
  std::uint64_t total = 0, overflow = 0;
  header >> magic >> layer >> bins >> lo >> hi >> total >> overflow;
  if (magic != "TEALH1" || !header) {
    throw ValidationError("bad histogram header '" + line + "'");
  }
  if (lo != 0.0) throw ValidationError("histogram lower bound must be 0");
  ActivationHistogram h(layer, bins, hi);
  std::uint64_t sum = 0;
  for (std::size_t k = 0; k < bins; ++k) {
    if (!(in >> h.counts_[k])) {
      throw ValidationError("histogram '" + layer + "': truncated counts");
    }
    sum += h.counts_[k];
  }
  if (sum + overflow != total) {
    throw ValidationError("histogram '" + layer +
                          "': total != sum(counts) + overflow");
  }
  h.overflow_ = overflow;
  h.total_ = total;
  return h;
}

void save_histogram(const std::string& path, const ActivationHistogram& h) {
  std::ofstream out(path);
  if (!out) throw IoError(path, "cannot open for writing");
  write_histogram(out, h);
  if (!out) throw IoError(path, "write failed");
}

ActivationHistogram load_histogram(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open for reading");
  return read_histogram(in);
}

}  // namespace teal
