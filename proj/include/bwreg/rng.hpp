#pragma once

#include <cstdint>

namespace bwreg {

// splitmix64-based generator. std::normal_distribution is implementation
// defined, so all randomness goes through this class to keep result files
// byte-identical across toolchains for a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo,hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double sign() { return (next_u64() & 1u) ? 1.0 : -1.0; }

  // index in [0,n)
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  double normal();

 private:
  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

// Independent deterministic stream for grid point / replicate workers.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace bwreg
