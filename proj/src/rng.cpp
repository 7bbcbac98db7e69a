#include "bwreg/rng.hpp"

#include <cmath>

namespace bwreg {

double Rng::normal() {
  if (have_cached_) {
    have_cached_ = false;
    return cached_;
  }
  // Box-Muller; u1 shifted away from 0 so log stays finite.
  double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double c = std::cos(6.283185307179586476925286766559 * u2);
  double s = std::sin(6.283185307179586476925286766559 * u2);
  cached_ = r * s;
  have_cached_ = true;
  return r * c;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  Rng mix(base ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  mix.next_u64();
  return mix.next_u64();
}

}  // namespace bwreg
