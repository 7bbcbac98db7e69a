#include "bwreg/fft.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace bwreg {

namespace {

struct Plan {
  std::vector<std::size_t> bitrev;
  std::vector<cplx> twiddle;  // e^{-2pi i k / n} for k < n/2
};

const Plan& plan_for(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<Plan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;

  auto plan = std::make_unique<Plan>();
  plan->bitrev.resize(n);
  std::size_t log2n = 0;
  while ((std::size_t{1} << log2n) < n) ++log2n;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < log2n; ++b)
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n - 1 - b);
    plan->bitrev[i] = r;
  }
  plan->twiddle.resize(n / 2);
  const double step = -2.0 * M_PI / static_cast<double>(n);
  for (std::size_t k = 0; k < n / 2; ++k)
    plan->twiddle[k] = cplx(std::cos(step * static_cast<double>(k)),
                            std::sin(step * static_cast<double>(k)));
  const Plan& ref = *plan;
  cache.emplace(n, std::move(plan));
  return ref;
}

}  // namespace

void fft_pow2(std::vector<cplx>& a, int sign) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft_pow2: length must be a power of two");
  if (n == 1) return;
  const Plan& plan = plan_for(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = plan.bitrev[i];
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t tstep = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      std::size_t tw = 0;
      for (std::size_t k = 0; k < half; ++k, tw += tstep) {
        cplx w = plan.twiddle[tw];
        if (sign > 0) w = std::conj(w);
        cplx u = a[start + k];
        cplx v = a[start + k + half] * w;
        a[start + k] = u + v;
        a[start + k + half] = u - v;
      }
    }
  }
}

std::vector<cplx> unitary_fft(const std::vector<double>& x) {
  std::vector<cplx> a(x.begin(), x.end());
  fft_pow2(a, -1);
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.size()));
  for (auto& v : a) v *= scale;
  return a;
}

std::vector<cplx> unitary_fft(const std::vector<cplx>& x) {
  std::vector<cplx> a = x;
  fft_pow2(a, -1);
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.size()));
  for (auto& v : a) v *= scale;
  return a;
}

std::vector<cplx> unitary_ifft(const std::vector<cplx>& x) {
  std::vector<cplx> a = x;
  fft_pow2(a, +1);
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.size()));
  for (auto& v : a) v *= scale;
  return a;
}

std::vector<double> unitary_ifft_real(const std::vector<cplx>& x) {
  std::vector<cplx> a = x;
  fft_pow2(a, +1);
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.size()));
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i].real() * scale;
  return out;
}

}  // namespace bwreg
