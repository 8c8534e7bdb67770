#pragma once

#include <cstdint>

namespace marginbench {

// splitmix64 finalizer. All randomness in the library flows through this,
// so results are bit-identical across platforms and thread schedules.
std::uint64_t mix64(std::uint64_t x);

// Key derivation for independent draw streams: one stream per
// (seed, example, lane) triple. Attacks use lane = target rank, so adding
// or removing targets never perturbs the other targets' draws.
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t example, std::uint64_t lane);

// Counter-based generator: the n-th draw is a pure function of (key, n).
class Rng {
 public:
  explicit Rng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // standard normal (Box-Muller)

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace marginbench
