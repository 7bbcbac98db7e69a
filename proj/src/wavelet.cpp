#include "bwreg/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace bwreg {

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i)
    r *= static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// All roots of a complex polynomial by Durand-Kerner, Newton-polished.
std::vector<cplx> poly_roots(std::vector<double> coeffs) {
  const int deg = static_cast<int>(coeffs.size()) - 1;
  std::vector<cplx> c(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    c[i] = coeffs[i] / coeffs.back();  // monic
  auto eval = [&](cplx x) {
    cplx v = 0.0;
    for (int k = deg; k >= 0; --k) v = v * x + c[k];
    return v;
  };
  auto deriv = [&](cplx x) {
    cplx v = 0.0;
    for (int k = deg; k >= 1; --k) v = v * x + c[k] * static_cast<double>(k);
    return v;
  };
  std::vector<cplx> r(deg);
  cplx seed(0.4, 0.9);
  cplx acc = 1.0;
  for (int i = 0; i < deg; ++i) {
    acc *= seed;
    r[i] = acc;
  }
  for (int it = 0; it < 500; ++it) {
    double worst = 0.0;
    for (int i = 0; i < deg; ++i) {
      cplx denom = 1.0;
      for (int j = 0; j < deg; ++j)
        if (j != i) denom *= r[i] - r[j];
      cplx delta = eval(r[i]) / denom;
      r[i] -= delta;
      worst = std::max(worst, std::abs(delta) / (1.0 + std::abs(r[i])));
    }
    if (worst < 1e-15) break;
  }
  for (int i = 0; i < deg; ++i)
    for (int it = 0; it < 4; ++it) r[i] -= eval(r[i]) / deriv(r[i]);
  return r;
}

std::vector<cplx> poly_mul(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  std::vector<cplx> out(a.size() + b.size() - 1, cplx(0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

double meyer_phi_hat(double w) {
  w = std::fabs(w);
  const double lo = 2.0 * M_PI / 3.0;
  const double hi = 4.0 * M_PI / 3.0;
  if (w <= lo) return 1.0;
  if (w >= hi) return 0.0;
  const double x = 3.0 * w / (2.0 * M_PI) - 1.0;  // in (0,1)
  const double nu = x * x * x * x * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)));
  return std::cos(0.5 * M_PI * nu);
}

int int_log2(int n) {
  int l = 0;
  while ((1 << l) < n) ++l;
  return l;
}

}  // namespace

std::vector<double> daubechies_lowpass(int order) {
  if (order < 1 || order > 12)
    throw std::invalid_argument("daubechies order must be in [1,12]");
  if (order == 1) return {M_SQRT1_2, M_SQRT1_2};

  // Half-band polynomial P(y) = sum_{k<N} binom(N-1+k,k) y^k and its
  // minimum-phase spectral factor.
  const int N = order;
  std::vector<double> pcoef(N);
  for (int k = 0; k < N; ++k) pcoef[k] = binomial(N - 1 + k, k);
  std::vector<cplx> yroots = poly_roots(pcoef);

  std::vector<cplx> q{cplx(1.0)};
  double mod_prod = 1.0;
  for (const cplx& y : yroots) {
    const cplx c1 = 1.0 - 2.0 * y;
    const cplx disc = std::sqrt(c1 * c1 - 1.0);
    cplx z = c1 + disc;
    if (std::abs(c1 - disc) < std::abs(z)) z = c1 - disc;
    q = poly_mul(q, {cplx(1.0), -z});
    mod_prod *= 4.0 * std::abs(z);
  }
  const double kappa = std::sqrt(binomial(2 * N - 2, N - 1) / mod_prod);

  std::vector<cplx> bin(N + 1);
  const double half_pow = std::pow(0.5, N);
  for (int t = 0; t <= N; ++t) bin[t] = binomial(N, t) * half_pow;

  std::vector<cplx> hpoly = poly_mul(bin, q);
  std::vector<double> h(hpoly.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < hpoly.size(); ++t) {
    h[t] = M_SQRT2 * kappa * hpoly[t].real();
    sum += h[t];
  }
  if (sum < 0.0) {
    for (double& v : h) v = -v;
    sum = -sum;
  }
  const double scale = M_SQRT2 / sum;
  for (double& v : h) v *= scale;

  // The cascade relies on exact double-shift orthonormality.
  for (std::size_t m = 0; m < h.size() / 2; ++m) {
    double g = 0.0;
    for (std::size_t t = 0; t + 2 * m < h.size(); ++t) g += h[t] * h[t + 2 * m];
    const double target = (m == 0) ? 1.0 : 0.0;
    if (std::fabs(g - target) > 5e-12)
      throw std::logic_error("daubechies filter failed orthonormality check");
  }
  return h;
}

WaveletSystem::WaveletSystem(WaveletFamily family, int order, int max_level)
    : family_(family), order_(order), max_level_(max_level) {
  if (max_level < 2) throw std::invalid_argument("max level must be >= 2");
  if (max_level > 24) throw std::invalid_argument("max level too large");
  level_sizes_.resize(max_level + 1);
  level_sizes_[0] = 1;
  for (int j = 1; j <= max_level; ++j) level_sizes_[j] = 1 << (j - 1);

  if (family == WaveletFamily::daubechies) {
    lowpass_ = daubechies_lowpass(order);
    const std::size_t len = lowpass_.size();
    highpass_.resize(len);
    for (std::size_t t = 0; t < len; ++t) {
      const double sgn = (t % 2 == 0) ? 1.0 : -1.0;
      highpass_[t] = sgn * lowpass_[len - 1 - t];
    }
  } else {
    // One conjugate-mirror pair per dyadic stage length L = 2^{k+1}, sampled
    // from the Meyer lowpass H(w) = sqrt(2) phi_hat(2w).
    stage_h_.resize(max_level);
    stage_g_.resize(max_level);
    for (int k = 0; k < max_level; ++k) {
      const int L = 1 << (k + 1);
      auto& H = stage_h_[k];
      auto& G = stage_g_[k];
      H.resize(L);
      G.resize(L);
      for (int m = 0; m < L; ++m) {
        const int ms = (m <= L / 2) ? m : m - L;
        H[m] = M_SQRT2 * meyer_phi_hat(4.0 * M_PI * ms / L);
      }
      for (int m = 0; m < L; ++m) {
        const double ang = -2.0 * M_PI * m / L;
        G[m] = cplx(std::cos(ang), std::sin(ang)) * H[(m + L / 2) % L];
      }
    }
  }
}

std::shared_ptr<const WaveletSystem> WaveletSystem::daubechies(int order, int max_level) {
  if (order < 2) throw std::invalid_argument("daubechies order must be >= 2");
  return std::shared_ptr<const WaveletSystem>(
      new WaveletSystem(WaveletFamily::daubechies, order, max_level));
}

std::shared_ptr<const WaveletSystem> WaveletSystem::meyer(int max_level) {
  return std::shared_ptr<const WaveletSystem>(
      new WaveletSystem(WaveletFamily::meyer, 0, max_level));
}

int WaveletSystem::level_size(int j) const {
  if (j < 0 || j > max_level_) throw std::out_of_range("level index out of range");
  return level_sizes_[j];
}

std::string WaveletSystem::name() const {
  if (family_ == WaveletFamily::meyer) return "meyer";
  return "db" + std::to_string(order_);
}

CoeffField WaveletSystem::analyze(const GridFunction& g) const {
  if (static_cast<int>(g.size()) != signal_length())
    throw std::invalid_argument("analyze: signal length does not match system");
  check_grid_function(g);
  if (family_ == WaveletFamily::daubechies) return analyze_daubechies(g);
  return analyze_meyer_spectrum(unitary_fft(g.values));
}

GridFunction WaveletSystem::synthesize(const CoeffField& z) const {
  if (z.empty() || &z.system() != this)
    throw std::invalid_argument("synthesize: field does not belong to this system");
  if (family_ == WaveletFamily::daubechies) return synthesize_daubechies(z);
  return GridFunction(unitary_ifft_real(synthesize_meyer_spectrum(z)));
}

CoeffField WaveletSystem::analyze_spectrum(std::vector<cplx> spectrum) const {
  if (static_cast<int>(spectrum.size()) != signal_length())
    throw std::invalid_argument("analyze_spectrum: length mismatch");
  if (family_ == WaveletFamily::meyer) return analyze_meyer_spectrum(std::move(spectrum));
  return analyze_daubechies(GridFunction(unitary_ifft_real(spectrum)));
}

std::vector<cplx> WaveletSystem::synthesize_spectrum(const CoeffField& z) const {
  if (z.empty() || &z.system() != this)
    throw std::invalid_argument("synthesize_spectrum: field does not belong to this system");
  if (family_ == WaveletFamily::meyer) return synthesize_meyer_spectrum(z);
  return unitary_fft(synthesize_daubechies(z).values);
}

CoeffField WaveletSystem::analyze_daubechies(const GridFunction& g) const {
  CoeffField z(shared_from_this());
  std::vector<double> cur = g.values;
  const int flen = static_cast<int>(lowpass_.size());
  std::vector<double> next, det;
  for (int L = signal_length(); L >= 2; L /= 2) {
    const int half = L / 2;
    next.assign(half, 0.0);
    det.assign(half, 0.0);
    for (int k = 0; k < half; ++k) {
      double sa = 0.0, sd = 0.0;
      for (int t = 0; t < flen; ++t) {
        const double v = cur[(2 * k + t) % L];
        sa += lowpass_[t] * v;
        sd += highpass_[t] * v;
      }
      next[k] = sa;
      det[k] = sd;
    }
    const int j = int_log2(L);
    std::copy(det.begin(), det.end(), z.block(j).begin());
    cur.swap(next);
  }
  z.block(0)[0] = cur[0];
  return z;
}

GridFunction WaveletSystem::synthesize_daubechies(const CoeffField& z) const {
  std::vector<double> cur{z.block(0)[0]};
  const int flen = static_cast<int>(lowpass_.size());
  std::vector<double> out;
  for (int L = 2; L <= signal_length(); L *= 2) {
    const int half = L / 2;
    const int j = int_log2(L);
    auto det = z.block(j);
    out.assign(L, 0.0);
    for (int k = 0; k < half; ++k) {
      const double a = cur[k];
      const double d = det[k];
      for (int t = 0; t < flen; ++t)
        out[(2 * k + t) % L] += lowpass_[t] * a + highpass_[t] * d;
    }
    cur.swap(out);
  }
  return GridFunction(std::move(cur));
}

CoeffField WaveletSystem::analyze_meyer_spectrum(std::vector<cplx> spectrum) const {
  CoeffField z(shared_from_this());
  std::vector<cplx> cur = std::move(spectrum);
  std::vector<cplx> low, det;
  for (int L = signal_length(); L >= 2; L /= 2) {
    const int half = L / 2;
    const int k = int_log2(L) - 1;
    const auto& H = stage_h_[k];
    const auto& G = stage_g_[k];
    low.assign(half, cplx(0.0));
    det.assign(half, cplx(0.0));
    for (int q = 0; q < half; ++q) {
      const cplx a = cur[q];
      const cplx b = cur[q + half];
      low[q] = (H[q] * a + H[q + half] * b) * M_SQRT1_2;
      det[q] = (std::conj(G[q]) * a + std::conj(G[q + half]) * b) * M_SQRT1_2;
    }
    const int j = int_log2(L);
    std::vector<double> block_time = unitary_ifft_real(det);
    std::copy(block_time.begin(), block_time.end(), z.block(j).begin());
    cur.swap(low);
  }
  z.block(0)[0] = cur[0].real();
  return z;
}

std::vector<cplx> WaveletSystem::synthesize_meyer_spectrum(const CoeffField& z) const {
  std::vector<cplx> cur{cplx(z.block(0)[0])};
  std::vector<cplx> next;
  for (int L = 2; L <= signal_length(); L *= 2) {
    const int half = L / 2;
    const int k = int_log2(L) - 1;
    const auto& H = stage_h_[k];
    const auto& G = stage_g_[k];
    const int j = int_log2(L);
    auto blk = z.block(j);
    std::vector<cplx> det = unitary_fft(std::vector<double>(blk.begin(), blk.end()));
    next.assign(L, cplx(0.0));
    for (int q = 0; q < half; ++q) {
      next[q] = (H[q] * cur[q] + G[q] * det[q]) * M_SQRT1_2;
      next[q + half] = (H[q + half] * cur[q] + G[q + half] * det[q]) * M_SQRT1_2;
    }
    cur.swap(next);
  }
  return cur;
}

CoeffField::CoeffField(std::shared_ptr<const WaveletSystem> sys) : sys_(std::move(sys)) {
  const auto& sizes = sys_->level_sizes();
  offsets_.resize(sizes.size() + 1);
  offsets_[0] = 0;
  for (std::size_t j = 0; j < sizes.size(); ++j) offsets_[j + 1] = offsets_[j] + sizes[j];
  data_.assign(offsets_.back(), 0.0);
}

int CoeffField::level_count() const { return sys_ ? sys_->level_count() : 0; }

std::span<double> CoeffField::block(int j) {
  if (j < 0 || j >= level_count()) throw std::out_of_range("block index out of range");
  return {data_.data() + offsets_[j], static_cast<std::size_t>(offsets_[j + 1] - offsets_[j])};
}

std::span<const double> CoeffField::block(int j) const {
  if (j < 0 || j >= level_count()) throw std::out_of_range("block index out of range");
  return {data_.data() + offsets_[j], static_cast<std::size_t>(offsets_[j + 1] - offsets_[j])};
}

CoeffField analyze(const GridFunction& g, const std::shared_ptr<const WaveletSystem>& sys) {
  return sys->analyze(g);
}

GridFunction synthesize(const CoeffField& z) { return z.system().synthesize(z); }

std::span<const double> level_block(const CoeffField& z, int j) { return z.block(j); }

double dot(const CoeffField& a, const CoeffField& b) {
  if (a.size() != b.size()) throw std::invalid_argument("coefficient size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

double euclidean_norm(const CoeffField& z) {
  double s = 0.0;
  for (double v : z.data()) s += v * v;
  return std::sqrt(s);
}

CoeffField operator+(const CoeffField& a, const CoeffField& b) {
  if (a.size() != b.size()) throw std::invalid_argument("coefficient size mismatch");
  CoeffField r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] += b.data()[i];
  return r;
}

CoeffField operator-(const CoeffField& a, const CoeffField& b) {
  if (a.size() != b.size()) throw std::invalid_argument("coefficient size mismatch");
  CoeffField r = a;
  for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] -= b.data()[i];
  return r;
}

CoeffField operator*(double c, const CoeffField& a) {
  CoeffField r = a;
  for (double& v : r.data()) v *= c;
  return r;
}

}  // namespace bwreg
