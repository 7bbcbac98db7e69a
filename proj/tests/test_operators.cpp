#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "bwreg/fft.hpp"
#include "bwreg/operators.hpp"
#include "bwreg/rng.hpp"

using namespace bwreg;

namespace {

GridFunction random_grid(int n, std::uint64_t seed) {
  GridFunction g(n);
  Rng rng(seed);
  for (auto& v : g.values) v = rng.normal();
  return g;
}

}  // namespace

TEST_CASE("convolution multiplier values") {
  auto sys = WaveletSystem::meyer(6);
  auto model = conv_model(1.0, sys);
  const int n = sys->signal_length();

  SUBCASE("constant input passes through unchanged") {
    GridFunction g(n);
    for (auto& v : g.values) v = 3.5;
    const GridFunction out = model->apply(g);
    for (double v : out.values) CHECK(v == doctest::Approx(3.5).epsilon(1e-13));
  }

  SUBCASE("the first Fourier mode is scaled by 2^{-1/2}") {
    GridFunction g(n);
    for (int i = 0; i < n; ++i) g[i] = std::cos(2.0 * M_PI * i / n);
    const GridFunction out = model->apply(g);
    for (int i = 0; i < n; ++i)
      CHECK(out[i] == doctest::Approx(g[i] / M_SQRT2).epsilon(1e-12));
  }

  SUBCASE("rejects nonpositive smoothing order") {
    CHECK_THROWS_AS((void)conv_model(0.0, sys), std::invalid_argument);
    CHECK_THROWS_AS((void)conv_model(-1.0, sys), std::invalid_argument);
  }
}

TEST_CASE("adjoint identities hold to near machine precision") {
  auto sys = WaveletSystem::daubechies(4, 7);
  const int n = sys->signal_length();
  auto conv = conv_model(1.5, sys);
  auto ham = hammerstein_model(default_hammerstein_phi(), sys);
  for (const auto& model : {conv, ham}) {
    for (int trial = 0; trial < 100; ++trial) {
      const GridFunction f = random_grid(n, 100 + trial);
      const GridFunction h = random_grid(n, 200 + trial);
      const GridFunction r = random_grid(n, 300 + trial);
      const GridFunction ah = model->derivative_apply(f, h);
      const GridFunction atr = model->derivative_adjoint_apply(f, r);
      const double lhs = dot(ah, r);
      const double rhs = dot(h, atr);
      const double scale = euclidean_norm(ah) * euclidean_norm(r);
      CHECK(std::fabs(lhs - rhs) <= 1e-10 * std::max(scale, 1e-300));
    }
  }
}

TEST_CASE("hammerstein with identity nonlinearity integrates exactly") {
  ScalarFunction id;
  id.f = [](double x) { return x; };
  id.df = [](double) { return 1.0; };
  id.ddf = [](double) { return 0.0; };
  id.name = "identity";
  auto sys = WaveletSystem::daubechies(2, 6);
  auto model = hammerstein_model(id, sys);
  const int n = sys->signal_length();

  GridFunction one(n);
  for (auto& v : one.values) v = 1.0;
  const GridFunction out = model->apply(one);
  for (int i = 0; i < n; ++i)
    CHECK(out[i] == doctest::Approx(static_cast<double>(i) / n).epsilon(1e-13));

  // derivative does not depend on the base point in the linear case
  const GridFunction h = random_grid(n, 4);
  const GridFunction d1 = model->derivative_apply(one, h);
  const GridFunction d2 = model->derivative_apply(random_grid(n, 5), h);
  CHECK(euclidean_norm(d1 - d2) < 1e-14);
}

TEST_CASE("hammerstein derivative passes the Taylor remainder test") {
  auto sys = WaveletSystem::daubechies(3, 7);
  auto model = hammerstein_model(default_hammerstein_phi(), sys);
  const int n = sys->signal_length();
  const GridFunction f = random_grid(n, 21);
  const GridFunction h = random_grid(n, 22);
  const GridFunction ff = model->apply(f);
  const GridFunction dfh = model->derivative_apply(f, h);
  double prev_ratio = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double eps = std::pow(10.0, -2 - k);
    const GridFunction pert = model->apply(f + eps * h);
    const double remainder = euclidean_norm(pert - ff - eps * dfh);
    const double ratio = remainder / (eps * eps);
    if (k > 0) CHECK(ratio == doctest::Approx(prev_ratio).epsilon(0.05));
    prev_ratio = ratio;
  }
}

TEST_CASE("non-finite nonlinearity values raise a numerical-domain error") {
  ScalarFunction bad;
  bad.f = [](double x) { return x > 0.5 ? std::numeric_limits<double>::quiet_NaN() : x; };
  bad.df = [](double) { return 1.0; };
  bad.ddf = [](double) { return 0.0; };
  bad.name = "bad";
  auto sys = WaveletSystem::daubechies(2, 4);
  auto model = hammerstein_model(bad, sys);
  GridFunction g(sys->signal_length());
  for (auto& v : g.values) v = 1.0;
  CHECK_THROWS_AS((void)model->apply(g), std::runtime_error);
}

TEST_CASE("smoothing constants: sampled ratios against the dense reference") {
  auto sys = WaveletSystem::daubechies(2, 4);  // n = 16
  auto model = conv_model(1.0, sys);
  const SmoothingConstants sc = estimate_smoothing_constants(*model, 100, 7);
  CHECK(sc.l1_hat > 0.0);
  CHECK(sc.l2_hat > 0.0);
  CHECK(sc.l1_hat * sc.l2_hat >= 1.0 - 1e-12);
  // the dense values bound every sampled ratio
  CHECK(sc.l2_exact > 0.0);
  CHECK(sc.l2_hat <= sc.l2_exact * (1.0 + 1e-9));
  CHECK(sc.l1_hat <= sc.l1_exact * (1.0 + 1e-9));
  // per-level probes make the estimates reasonably sharp
  CHECK(sc.l2_hat >= 0.5 * sc.l2_exact);
  CHECK(sc.l1_hat >= 0.5 * sc.l1_exact);

  SUBCASE("a pure scaling-block impulse has ratio one") {
    CoeffField e(sys);
    e.block(0)[0] = 1.0;
    const GridFunction img = model->apply(synthesize(e));
    CHECK(euclidean_norm(img) == doctest::Approx(besov_norm(e, {-1.0, 2.0, 2.0})).epsilon(1e-12));
  }
}

TEST_CASE("smoothing constants are stable across seeds") {
  auto sys = WaveletSystem::meyer(8);
  auto model = conv_model(1.0, sys);
  const SmoothingConstants a = estimate_smoothing_constants(*model, 150, 1);
  const SmoothingConstants b = estimate_smoothing_constants(*model, 150, 999);
  CHECK(std::fabs(a.l1_hat - b.l1_hat) <= 0.2 * std::max(a.l1_hat, b.l1_hat));
  CHECK(std::fabs(a.l2_hat - b.l2_hat) <= 0.2 * std::max(a.l2_hat, b.l2_hat));
}

TEST_CASE("hammerstein ratios sit inside the slope-scaled linear bracket") {
  // phi' in (1, 3/2]: ratios against the identity-quadrature extremes
  ScalarFunction id;
  id.f = [](double x) { return x; };
  id.df = [](double) { return 1.0; };
  id.ddf = [](double) { return 0.0; };
  id.name = "identity";
  auto sys = WaveletSystem::daubechies(4, 7);
  auto linear = hammerstein_model(id, sys);
  auto model = hammerstein_model(default_hammerstein_phi(), sys);
  const int n = sys->signal_length();
  const BesovIndex idx{-1.0, 2.0, 2.0};

  double lin_min = kInfinity, lin_max = 0.0;
  Rng rng(5);
  std::vector<CoeffField> fields;
  for (int t = 0; t < 60; ++t) {
    CoeffField dz(sys);
    for (int j = 0; j < dz.level_count(); ++j) {
      const double scale = std::exp2(-rng.uniform(0.0, 1.5) * j);
      for (double& v : dz.block(j)) v = scale * rng.normal();
    }
    fields.push_back(dz);
    const double num = euclidean_norm(linear->apply(synthesize(dz)));
    const double den = besov_norm(dz, idx);
    lin_min = std::min(lin_min, num / den);
    lin_max = std::max(lin_max, num / den);
  }
  const double m = 1.0, big_m = 1.5;
  for (const CoeffField& dz : fields) {
    const GridFunction base = synthesize(0.1 * dz);
    const GridFunction shifted = synthesize(1.1 * dz);
    const double num = euclidean_norm(model->apply(shifted) - model->apply(base));
    const double den = besov_norm(dz, idx);
    const double ratio = num / den;
    CHECK(ratio >= m * lin_min * (1.0 - 1e-9));
    CHECK(ratio <= big_m * lin_max * (1.0 + 1e-9));
  }
}

TEST_CASE("operator norms by power iteration match the dense factorization") {
  auto sys = WaveletSystem::daubechies(2, 4);
  auto model = conv_model(1.0, sys);
  const Matrix dense = oracles::dense_operator(*model);
  const double sigma = spectral_norm(dense);
  CHECK(operator_norm_estimate(*model, 80, 3) == doctest::Approx(sigma).epsilon(1e-8));

  // per-level restriction: compare against the dense column block
  for (int level : {0, 2, 4}) {
    int off = 0;
    for (int j = 0; j < level; ++j) off += sys->level_size(j);
    const int len = sys->level_size(level);
    Matrix block(dense.rows(), len);
    for (std::size_t r = 0; r < dense.rows(); ++r)
      for (int c = 0; c < len; ++c) block(r, c) = dense(r, off + c);
    CHECK(level_restricted_operator_norm(*model, level, 120, 3) ==
          doctest::Approx(spectral_norm(block)).epsilon(1e-7));
  }
}

TEST_CASE("data-side constants stay bounded as resolution grows") {
  auto coarse = conv_model(1.0, WaveletSystem::meyer(8));
  auto fine = conv_model(1.0, WaveletSystem::meyer(10));
  const auto [l3_c, l4_c] = estimate_data_side_constants(*coarse, 1.0, 2.0, 60, 2);
  const auto [l3_f, l4_f] = estimate_data_side_constants(*fine, 1.0, 2.0, 60, 2);
  CHECK(l3_c > 0.0);
  CHECK(l4_c > 0.0);
  CHECK(l3_f <= 2.0 * l3_c);
  CHECK(l4_f <= 2.0 * l4_c);
}
