#ifndef TEAL_RNG_H_
#define TEAL_RNG_H_

#include <cstdint>

namespace teal {

// Counter-based random stream. The n-th draw is a pure function of
// (seed, n), so results do not depend on the platform's <random>
// implementation. Child streams derived with split() are independent of
// the parent's counter.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();

  // Uniform in the open interval (0, 1), 53 bits of resolution.
  double next_uniform();

  // Stream for an independent worker / block / trial.
  RngStream split(std::uint64_t index) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

// Stateless 64-bit mix of (key, counter).
std::uint64_t counter_hash(std::uint64_t key, std::uint64_t counter);

}  // namespace teal

#endif  // TEAL_RNG_H_
