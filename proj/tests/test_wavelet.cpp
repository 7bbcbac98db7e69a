#include <cmath>
#include <vector>

#include "doctest.h"

#include "bwreg/rng.hpp"
#include "bwreg/wavelet.hpp"

using namespace bwreg;

namespace {

GridFunction random_signal(int n, std::uint64_t seed) {
  GridFunction g(n);
  Rng rng(seed);
  for (auto& v : g.values) v = rng.normal();
  return g;
}

}  // namespace

TEST_CASE("daubechies filters satisfy the quadrature conditions") {
  for (int order = 2; order <= 10; ++order) {
    const std::vector<double> h = daubechies_lowpass(order);
    CHECK(h.size() == static_cast<std::size_t>(2 * order));
    double sum = 0.0, sumsq = 0.0;
    for (double v : h) {
      sum += v;
      sumsq += v * v;
    }
    CHECK(sum == doctest::Approx(M_SQRT2).epsilon(1e-12));
    CHECK(sumsq == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t m = 1; m < h.size() / 2; ++m) {
      double g = 0.0;
      for (std::size_t t = 0; t + 2 * m < h.size(); ++t) g += h[t] * h[t + 2 * m];
      CHECK(std::fabs(g) < 5e-12);
    }
  }
}

TEST_CASE("db2 filter matches the closed form") {
  const std::vector<double> h = daubechies_lowpass(2);
  const double s3 = std::sqrt(3.0);
  const double d = 4.0 * M_SQRT2;
  // either the filter or its reverse, depending on the chosen spectral factor
  const std::vector<double> ref = {(1 + s3) / d, (3 + s3) / d, (3 - s3) / d, (1 - s3) / d};
  double direct = 0.0, reversed = 0.0;
  for (int i = 0; i < 4; ++i) {
    direct = std::max(direct, std::fabs(h[i] - ref[i]));
    reversed = std::max(reversed, std::fabs(h[i] - ref[3 - i]));
  }
  CHECK(std::min(direct, reversed) < 1e-12);
}

TEST_CASE("level bookkeeping") {
  auto sys = WaveletSystem::daubechies(4, 6);
  CHECK(sys->signal_length() == 64);
  CHECK(sys->level_count() == 7);
  int total = 0;
  for (int j = 0; j <= 6; ++j) total += sys->level_size(j);
  CHECK(total == 64);
  CHECK(sys->level_size(0) == 1);
  CHECK(sys->level_size(1) == 1);
  CHECK(sys->level_size(6) == 32);
  // frame bracket with the recorded constants
  for (int j = 0; j <= 6; ++j) {
    CHECK(sys->lower_frame_factor() * std::exp2(j) <= sys->level_size(j) + 1e-12);
    CHECK(sys->level_size(j) <= sys->frame_constant() * std::exp2(j) + 1e-12);
  }
  CHECK_THROWS_AS((void)sys->level_size(7), std::out_of_range);
}

TEST_CASE("perfect reconstruction and isometry") {
  for (int J : {4, 8, 12}) {
    std::vector<std::shared_ptr<const WaveletSystem>> systems = {
        WaveletSystem::daubechies(2, J), WaveletSystem::daubechies(4, J),
        WaveletSystem::daubechies(8, J), WaveletSystem::meyer(J)};
    for (const auto& sys : systems) {
      const GridFunction g = random_signal(sys->signal_length(), 101 + J);
      const CoeffField z = sys->analyze(g);
      const GridFunction back = sys->synthesize(z);
      const double ng = euclidean_norm(g);
      CHECK(euclidean_norm(back - g) <= 1e-10 * ng);
      CHECK(std::fabs(euclidean_norm(z) - ng) <= 1e-10 * ng);
      // analyze ∘ synthesize is the identity on coefficients
      const CoeffField z2 = sys->analyze(back);
      double worst = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i)
        worst = std::max(worst, std::fabs(z.data()[i] - z2.data()[i]));
      CHECK(worst <= 1e-10 * ng);
    }
  }
}

TEST_CASE("adjointness of the transform pair") {
  for (const auto& sys :
       {WaveletSystem::daubechies(4, 8), WaveletSystem::meyer(8)}) {
    const GridFunction g = random_signal(sys->signal_length(), 7);
    CoeffField z(sys);
    Rng rng(8);
    for (auto& v : z.data()) v = rng.normal();
    const double lhs = dot(sys->analyze(g), z);
    const double rhs = dot(g, sys->synthesize(z));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("constant signals live in the scaling block") {
  for (const auto& sys : {WaveletSystem::daubechies(2, 8), WaveletSystem::daubechies(7, 8),
                          WaveletSystem::meyer(8)}) {
    GridFunction g(sys->signal_length());
    for (auto& v : g.values) v = 1.0;
    const CoeffField z = sys->analyze(g);
    for (int j = 1; j < z.level_count(); ++j)
      for (double v : z.block(j)) CHECK(std::fabs(v) < 1e-10 * euclidean_norm(g));
    CHECK(std::fabs(z.block(0)[0]) > 1.0);
  }
}

TEST_CASE("zero maps to zero both ways") {
  auto sys = WaveletSystem::daubechies(4, 6);
  const CoeffField z = sys->analyze(GridFunction(sys->signal_length()));
  for (double v : z.data()) CHECK(v == 0.0);
  const GridFunction g = sys->synthesize(CoeffField(sys));
  for (double v : g.values) CHECK(v == 0.0);
}

TEST_CASE("unit coefficients synthesize to unit-norm atoms, linearly") {
  auto sys = WaveletSystem::daubechies(3, 7);
  CoeffField e1(sys), e2(sys), both(sys);
  e1.block(3)[1] = 1.0;
  e2.block(5)[9] = 1.0;
  both.block(3)[1] = 1.0;
  both.block(5)[9] = 1.0;
  const GridFunction w1 = sys->synthesize(e1);
  const GridFunction w2 = sys->synthesize(e2);
  const GridFunction w12 = sys->synthesize(both);
  CHECK(euclidean_norm(w1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(euclidean_norm(w2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(euclidean_norm(w12 - (w1 + w2)) < 1e-12);
}

TEST_CASE("level_block access") {
  auto sys = WaveletSystem::daubechies(2, 6);
  GridFunction g(sys->signal_length());
  for (auto& v : g.values) v = 1.0;
  const CoeffField z = sys->analyze(g);
  CHECK(level_block(z, 0).size() == 1);
  CHECK(level_block(z, 0)[0] == doctest::Approx(8.0));  // mean * sqrt(n)
  CHECK(level_block(z, 6).size() == 32);
  CHECK_THROWS_AS((void)level_block(z, 7), std::out_of_range);
  CHECK_THROWS_AS((void)level_block(z, -1), std::out_of_range);
}

TEST_CASE("vanishing moments annihilate polynomials away from the seam") {
  const int J = 10;
  for (int order : {2, 3}) {
    auto sys = WaveletSystem::daubechies(order, J);
    const int n = sys->signal_length();
    GridFunction g(n);
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) / n;
      double acc = 0.0;
      for (int m = 0; m < order; ++m) acc += std::pow(x, m);
      g[i] = acc;
    }
    const double scale = euclidean_norm(g);
    const CoeffField z = sys->analyze(g);
    const int flen = 2 * order;
    for (int j = 3; j <= J; ++j) {
      const int stage = J - j + 1;
      const int stride = 1 << stage;
      const int support = (flen - 1) * ((1 << stage) - 2) + flen;
      for (int k = 0; k < sys->level_size(j); ++k) {
        if (static_cast<long>(stride) * k + support >= n) continue;  // wraps the seam
        CHECK(std::fabs(z.block(j)[k]) <= 1e-8 * scale);
      }
    }
  }
}

TEST_CASE("length mismatch raises a configuration error") {
  auto sys = WaveletSystem::daubechies(4, 6);
  CHECK_THROWS_AS((void)sys->analyze(GridFunction(32)), std::invalid_argument);
  GridFunction bad(64);
  bad[5] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)sys->analyze(bad), std::invalid_argument);
}

TEST_CASE("spectrum entry points agree with the grid transforms") {
  for (const auto& sys :
       {WaveletSystem::meyer(8), WaveletSystem::daubechies(5, 8)}) {
    const GridFunction g = random_signal(sys->signal_length(), 19);
    const CoeffField z = sys->analyze(g);
    const CoeffField zs = sys->analyze_spectrum(unitary_fft(g.values));
    double worst = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i)
      worst = std::max(worst, std::fabs(z.data()[i] - zs.data()[i]));
    CHECK(worst < 1e-12 * euclidean_norm(g));

    const std::vector<cplx> spec = sys->synthesize_spectrum(z);
    const GridFunction back(unitary_ifft_real(spec));
    CHECK(euclidean_norm(back - sys->synthesize(z)) < 1e-12 * euclidean_norm(g));
  }
}

// Independent oracle: build the full analysis matrix from explicitly
// periodized equivalent filters (iterated upsampled convolutions, not the
// cascade recursion) and compare coefficients on n = 16.
TEST_CASE("cascade agrees with explicitly periodized filters on n = 16") {
  const int J = 4, n = 16;
  auto sys = WaveletSystem::daubechies(2, J);
  const std::vector<double>& h = sys->lowpass_filter();
  const std::vector<double>& g = sys->highpass_filter();

  auto upsample = [](const std::vector<double>& f) {
    std::vector<double> u(2 * f.size() - 1, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) u[2 * i] = f[i];
    return u;
  };
  auto convolve = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> c(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
  };

  // equivalent filters per stage: H_1 = h, H_{r+1} = up(H_r) * h;
  // detail filter at stage r: D_r = up^{r-1}(g) * H_{r-1}
  std::vector<std::vector<double>> eq_low{h};
  for (int r = 2; r <= J; ++r) eq_low.push_back(convolve(upsample(eq_low.back()), h));
  std::vector<std::vector<double>> eq_det{g};
  for (int r = 2; r <= J; ++r) {
    std::vector<double> gu = g;
    for (int i = 1; i < r; ++i) gu = upsample(gu);
    eq_det.push_back(convolve(gu, eq_low[r - 2]));
  }

  Rng rng(99);
  GridFunction sig(n);
  for (auto& v : sig.values) v = rng.normal();
  const CoeffField z = sys->analyze(sig);

  auto periodized_inner = [&](const std::vector<double>& filt, int shift) {
    double s = 0.0;
    for (std::size_t t = 0; t < filt.size(); ++t)
      s += filt[t] * sig[(shift + static_cast<int>(t)) % n];
    return s;
  };

  // block j holds stage r = J - j + 1 details at shifts 2^r k
  for (int j = 1; j <= J; ++j) {
    const int stage = J - j + 1;
    for (int k = 0; k < sys->level_size(j); ++k) {
      const double direct = periodized_inner(eq_det[stage - 1], (1 << stage) * k);
      CHECK(z.block(j)[k] == doctest::Approx(direct).epsilon(1e-12));
    }
  }
  const double scaling = periodized_inner(eq_low[J - 1], 0);
  CHECK(z.block(0)[0] == doctest::Approx(scaling).epsilon(1e-12));
}
