#include "teal/rng.h"

namespace teal {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t counter_hash(std::uint64_t key, std::uint64_t counter) {
  // Two rounds: the first whitens the key so that nearby seeds do not
  // produce shifted copies of the same sequence.
  return mix64(mix64(key + kGolden) + (counter + 1) * kGolden);
}

std::uint64_t RngStream::next_u64() { return counter_hash(seed_, counter_++); }

double RngStream::next_uniform() {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  const std::uint64_t k = next_u64() >> 11;
  return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

RngStream RngStream::split(std::uint64_t index) const {
  return RngStream(counter_hash(seed_ ^ 0xD1B54A32D192ED03ULL, index));
}

}  // namespace teal
