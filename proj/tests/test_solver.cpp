#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "bwreg/besov.hpp"
#include "bwreg/rng.hpp"
#include "bwreg/solver.hpp"

using namespace bwreg;

namespace {

GridFunction random_grid(int n, std::uint64_t seed) {
  GridFunction g(n);
  Rng rng(seed);
  for (auto& v : g.values) v = rng.normal();
  return g;
}

// worst violation of the level-wise optimality inclusion
// -(F* r)_j in alpha w_j d||.||_p at the minimizer
double kkt_violation(const ForwardModel& model, const GridFunction& g_obs,
                     const SolveResult& sol, double alpha, double p) {
  const auto sys = model.system();
  const GridFunction f = synthesize(sol.minimizer);
  const GridFunction r = model.apply(f) - g_obs;
  const CoeffField grad = sys->analyze(model.derivative_adjoint_apply(f, r));
  const double q = (p == 1.0) ? kInfinity : p / (p - 1.0);
  double worst = 0.0;
  for (int j = 0; j < sol.minimizer.level_count(); ++j) {
    const double tau = alpha * level_weight(j, 0.0, p);
    auto gj = grad.block(j);
    auto zj = sol.minimizer.block(j);
    std::vector<double> neg(gj.size());
    for (std::size_t i = 0; i < gj.size(); ++i) neg[i] = -gj[i];
    const double dual = block_lp_norm(neg, q);
    worst = std::max(worst, (dual - tau) / tau);
    bool zero = true;
    for (double v : zj)
      if (v != 0.0) zero = false;
    if (!zero) {
      double pairing = 0.0;
      for (std::size_t i = 0; i < gj.size(); ++i) pairing += -gj[i] * zj[i];
      const double target = tau * block_lp_norm(zj, p);
      worst = std::max(worst, std::fabs(pairing - target) / std::max(target, 1e-300));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("prox closed forms") {
  SUBCASE("soft threshold") {
    const auto y = prox_block_lp(std::vector<double>{3.0, -0.5}, 1.0, 1.0);
    CHECK(y[0] == doctest::Approx(2.0));
    CHECK(y[1] == 0.0);
  }
  SUBCASE("group shrinkage") {
    const auto y = prox_block_lp(std::vector<double>{3.0, 4.0}, 1.0, 2.0);
    CHECK(y[0] == doctest::Approx(2.4).epsilon(1e-14));
    CHECK(y[1] == doctest::Approx(3.2).epsilon(1e-14));
  }
  SUBCASE("single nonzero entry reduces to the scalar threshold for any p") {
    for (double p : {1.0, 1.25, 1.5, 2.0}) {
      const auto y = prox_block_lp(std::vector<double>{2.0, 0.0}, 1.0, p);
      CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(std::fabs(y[1]) < 1e-12);
    }
  }
  SUBCASE("tau = 0 is the identity, negative tau rejected") {
    const std::vector<double> x{1.0, -2.0, 3.0};
    CHECK(prox_block_lp(x, 0.0, 1.5) == x);
    CHECK_THROWS_AS((void)prox_block_lp(x, -1.0, 1.0), std::invalid_argument);
  }
}

TEST_CASE("prox against independent 1-d / radial / stationarity oracles") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const int size = 1 + static_cast<int>(rng.below(6));
    std::vector<double> x(size);
    for (double& v : x) v = 3.0 * rng.normal();
    const double tau = std::fabs(rng.normal());

    // the golden-section oracles locate minima to about sqrt(eps) = 1e-8;
    // the acceptance threshold of 1e-6 is what they can certify
    {
      const auto y = prox_block_lp(x, tau, 1.0);
      for (int i = 0; i < size; ++i)
        CHECK(std::fabs(y[i] - oracles::prox_scalar_l1(x[i], tau)) < 1e-6);
      CHECK(prox_subgradient_residual(x, y, tau, 1.0) < 1e-8);
    }
    {
      const auto y = prox_block_lp(x, tau, 2.0);
      const auto ref = oracles::prox_group_l2(x, tau);
      for (int i = 0; i < size; ++i) CHECK(std::fabs(y[i] - ref[i]) < 1e-6);
      CHECK(prox_subgradient_residual(x, y, tau, 2.0) < 1e-8);
    }
    {
      const double p = 1.0 + 0.8 * rng.uniform();
      const auto y = prox_block_lp(x, tau, p);
      const auto ref = oracles::prox_block_general(x, tau, p);
      for (int i = 0; i < size; ++i) CHECK(std::fabs(y[i] - ref[i]) < 1e-7);
      CHECK(prox_subgradient_residual(x, y, tau, p) < 1e-8);
    }
  }
}

TEST_CASE("the stationarity oracle itself agrees with a dense 2-d search") {
  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> x{2.0 * rng.normal(), 2.0 * rng.normal()};
    const double tau = 0.3 + rng.uniform();
    const auto a = oracles::prox_block_general(x, tau, 1.5);
    const auto b = oracles::prox_2d_grid(x, tau, 1.5);
    CHECK(std::fabs(a[0] - b[0]) < 1e-6);
    CHECK(std::fabs(a[1] - b[1]) < 1e-6);
  }
}

TEST_CASE("prox_penalty applies level weights") {
  auto sys = WaveletSystem::daubechies(2, 6);
  CoeffField z(sys);
  // p=1: effective threshold tau 2^{-j/2}; plant entries straddling it
  const double tau = 0.5;
  for (int j = 1; j <= 6; ++j) {
    z.block(j)[0] = 1.01 * tau * std::exp2(-0.5 * j);
    if (sys->level_size(j) > 1) z.block(j)[1] = 0.99 * tau * std::exp2(-0.5 * j);
  }
  const CoeffField y = prox_penalty(z, tau, 1.0);
  for (int j = 1; j <= 6; ++j) {
    CHECK(y.block(j)[0] == doctest::Approx(0.01 * tau * std::exp2(-0.5 * j)).epsilon(1e-10));
    if (sys->level_size(j) > 1) CHECK(y.block(j)[1] == 0.0);
  }

  SUBCASE("tau = 0 identity") {
    Rng rng(2);
    CoeffField r(sys);
    for (double& v : r.data()) v = rng.normal();
    const CoeffField same = prox_penalty(r, 0.0, 1.5);
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(same.data()[i] == r.data()[i]);
  }

  SUBCASE("prox output beats the trivial candidates") {
    Rng rng(3);
    for (double p : {1.0, 1.5, 2.0}) {
      CoeffField r(sys);
      for (double& v : r.data()) v = rng.normal();
      const double t = 0.7;
      const CoeffField y2 = prox_penalty(r, t, p);
      double sq = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) {
        const double d = y2.data()[i] - r.data()[i];
        sq += d * d;
      }
      const double obj = 0.5 * sq + t * besov_norm(y2, {0.0, p, 1.0});
      CHECK(obj <= t * besov_norm(r, {0.0, p, 1.0}) * (1.0 + 1e-12));  // candidate y = z
      CHECK(obj <= 0.5 * dot(r, r) * (1.0 + 1e-12));                   // candidate y = 0
    }
  }

  SUBCASE("dual-feasible blocks collapse to exact zero") {
    for (double p : {1.0, 1.5, 2.0}) {
      CoeffField r(sys);
      for (double& v : r.block(3)) v = 1e-4;  // far below the threshold
      const CoeffField y3 = prox_penalty(r, 1.0, p);
      for (double v : y3.block(3)) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("huge alpha yields the zero minimizer") {
  auto sys = WaveletSystem::meyer(6);
  auto model = conv_model(1.0, sys);
  const GridFunction g = random_grid(sys->signal_length(), 5);
  SolveConfig cfg;
  cfg.alpha = 1e4;
  cfg.penalty_p = 1.0;
  cfg.tolerance = 1e-12;
  const SolveResult sol = solve_tikhonov(*model, g, cfg);
  CHECK(sol.converged);
  CHECK(euclidean_norm(sol.minimizer) == 0.0);
  CHECK(sol.data_residual == doctest::Approx(euclidean_norm(g)).epsilon(1e-12));
  for (bool zero : sol.zero_blocks) CHECK(zero);
}

TEST_CASE("tiny linear instance matches exhaustive coordinate descent") {
  auto sys = WaveletSystem::daubechies(2, 3);  // n = 8
  auto model = conv_model(1.0, sys);
  const GridFunction g = random_grid(8, 12);
  const double alpha = 0.02;

  SolveConfig cfg;
  cfg.alpha = alpha;
  cfg.penalty_p = 1.0;
  cfg.tolerance = 1e-10;
  cfg.max_iterations = 200000;
  const SolveResult sol = solve_tikhonov(*model, g, cfg);
  CHECK(sol.converged);

  const Matrix a = oracles::dense_operator(*model);
  std::vector<double> thresholds;
  for (int j = 0; j < sys->level_count(); ++j)
    for (int k = 0; k < sys->level_size(j); ++k)
      thresholds.push_back(alpha * level_weight(j, 0.0, 1.0));
  const auto cd = oracles::coordinate_descent_l1(a, g.values, thresholds, 1e-15, 200000);

  CHECK(std::fabs(sol.objective - cd.objective) <= 1e-6);
  for (std::size_t i = 0; i < cd.z.size(); ++i)
    CHECK(std::fabs(sol.minimizer.data()[i] - cd.z[i]) < 1e-5);
}

TEST_CASE("optimality certificate at convergence, p in {1, 2}") {
  auto sys = WaveletSystem::meyer(7);
  auto model = conv_model(1.0, sys);
  const GridFunction g = random_grid(sys->signal_length(), 31);
  for (double p : {1.0, 2.0}) {
    SolveConfig cfg;
    cfg.alpha = 0.05;
    cfg.penalty_p = p;
    cfg.tolerance = 1e-11;
    cfg.max_iterations = 100000;
    const SolveResult sol = solve_tikhonov(*model, g, cfg);
    CHECK(sol.converged);
    CHECK(kkt_violation(*model, g, sol, cfg.alpha, p) < 1e-7);
  }
}

TEST_CASE("objective trace is monotone with restart enabled") {
  auto sys = WaveletSystem::meyer(8);
  auto model = conv_model(2.0, sys);
  BallSpec ball;
  ball.index = {1.0, 2.0, kInfinity};
  const CoeffField f_true = make_extremal(sys, ball, 3);
  const GridFunction g = model->apply(synthesize(f_true));
  SolveConfig cfg;
  cfg.alpha = 1e-4;
  cfg.penalty_p = 2.0;
  cfg.tolerance = 1e-9;
  const SolveResult sol = solve_tikhonov(*model, g, cfg);
  REQUIRE(sol.objective_trace.size() > 2);
  for (std::size_t i = 1; i < sol.objective_trace.size(); ++i)
    CHECK(sol.objective_trace[i] <=
          sol.objective_trace[i - 1] + 1e-12 * (std::fabs(sol.objective_trace[i - 1]) + 1.0));
  CHECK(sol.objective_trace.back() <= sol.objective_trace.front());
}

TEST_CASE("expanded-square objective gives the same minimizer on noiseless data") {
  auto sys = WaveletSystem::meyer(6);
  auto model = conv_model(1.0, sys);
  BallSpec ball;
  ball.index = {1.0, 2.0, kInfinity};
  const CoeffField f_true = make_extremal(sys, ball, 8);
  const GridFunction g = model->apply(synthesize(f_true));
  SolveConfig cfg;
  cfg.alpha = 1e-3;
  cfg.penalty_p = 2.0;
  cfg.tolerance = 1e-11;
  cfg.max_iterations = 100000;
  const SolveResult plain = solve_tikhonov(*model, g, cfg);
  const SolveResult expanded = solve_tikhonov_stat(*model, g, cfg);
  CHECK(plain.converged);
  CHECK(expanded.converged);
  double worst = 0.0;
  for (std::size_t i = 0; i < plain.minimizer.size(); ++i)
    worst = std::max(worst,
                     std::fabs(plain.minimizer.data()[i] - expanded.minimizer.data()[i]));
  CHECK(worst < 1e-7);
  // objectives differ by 0.5 ||g||^2
  CHECK(plain.objective - expanded.objective ==
        doctest::Approx(0.5 * dot(g, g)).epsilon(1e-9));
}

TEST_CASE("statistical smooth part matches finite differences (nonlinear model)") {
  auto sys = WaveletSystem::daubechies(3, 5);
  auto model = hammerstein_model(default_hammerstein_phi(), sys);
  const int n = sys->signal_length();
  const GridFunction g = random_grid(n, 77);
  Rng rng(78);
  CoeffField z(sys);
  for (double& v : z.data()) v = 0.3 * rng.normal();

  auto smooth_value = [&](const CoeffField& c) {
    const GridFunction img = model->apply(synthesize(c));
    return 0.5 * dot(img, img) - dot(g, img);
  };
  const GridFunction f = synthesize(z);
  const GridFunction img = model->apply(f);
  const CoeffField grad = sys->analyze(model->derivative_adjoint_apply(f, img - g));

  Rng dir_rng(79);
  CoeffField dir(sys);
  for (double& v : dir.data()) v = dir_rng.normal();
  const double eps = 1e-6;
  const double fd = (smooth_value(z + eps * dir) - smooth_value((-eps) * dir + z)) / (2.0 * eps);
  CHECK(fd == doctest::Approx(dot(grad, dir)).epsilon(1e-6));
}

TEST_CASE("nonlinear solve converges with backtracking and stays monotone") {
  auto sys = WaveletSystem::daubechies(3, 6);
  auto model = hammerstein_model(default_hammerstein_phi(), sys);
  BallSpec ball;
  ball.index = {1.0, 1.0, kInfinity};
  ball.radius = 0.5;
  const CoeffField f_true = make_extremal(sys, ball, 4);
  const GridFunction g = model->apply(synthesize(f_true));
  SolveConfig cfg = default_config_for(*model);
  cfg.alpha = 1e-5;
  cfg.penalty_p = 1.0;
  cfg.tolerance = 1e-9;
  cfg.max_iterations = 100000;
  const SolveResult sol = solve_tikhonov(*model, g, cfg);
  CHECK(sol.converged);
  for (std::size_t i = 1; i < sol.objective_trace.size(); ++i)
    CHECK(sol.objective_trace[i] <=
          sol.objective_trace[i - 1] + 1e-12 * (std::fabs(sol.objective_trace[i - 1]) + 1.0));
  // recovers the truth reasonably well at small alpha and exact data
  CHECK(besov_norm(sol.minimizer - f_true, {0.0, 1.0, 1.0}) < 0.1 * besov_norm(f_true, {0.0, 1.0, 1.0}));
}

TEST_CASE("exact data and shrinking alpha drive the error down") {
  auto sys = WaveletSystem::meyer(8);
  auto model = conv_model(1.0, sys);
  BallSpec ball;
  ball.index = {1.0, 2.0, kInfinity};
  const CoeffField f_true = make_extremal(sys, ball, 9);
  const GridFunction g = model->apply(synthesize(f_true));
  double prev_err = kInfinity;
  CoeffField warm;
  for (double alpha : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}) {
    SolveConfig cfg;
    cfg.alpha = alpha;
    cfg.penalty_p = 2.0;
    cfg.tolerance = 1e-10;
    cfg.max_iterations = 100000;
    const SolveResult sol = solve_tikhonov(*model, g, cfg, warm.empty() ? nullptr : &warm);
    warm = sol.minimizer;
    const double err = besov_norm(sol.minimizer - f_true, {0.0, 2.0, 1.0});
    CHECK(err <= prev_err * 1.05 + 1e-12);
    prev_err = err;
  }
  CHECK(prev_err < 0.05 * besov_norm(f_true, {0.0, 2.0, 1.0}));
}

TEST_CASE("parameter choice rules") {
  CHECK(choose_alpha_deterministic(0.01, 1.0, 1.0) == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(choose_alpha_deterministic(1.0, 2.0, 0.5) == doctest::Approx(1.0));
  CHECK_THROWS_AS((void)choose_alpha_deterministic(-1.0, 1.0, 1.0), std::invalid_argument);

  CHECK(choose_alpha_statistical(1.0, 1.0, 1.0, 1.0, 1.0) == doctest::Approx(1.0));
  // s = a = d~ = 1: alpha = eps^{6/5} rho^{-1/5}
  CHECK(choose_alpha_statistical(0.1, 2.0, 1.0, 1.0, 1.0) ==
        doctest::Approx(std::pow(0.1, 1.2) * std::pow(2.0, -0.2)).epsilon(1e-12));
  CHECK_THROWS_AS((void)choose_alpha_statistical(0.1, 1.0, 1.0, 1.0, 2.0),
                  std::invalid_argument);

  SUBCASE("the balanced rule equalizes the two bound terms in eps") {
    // term1 ~ alpha^{(dt+2a)/(dt-2a)} eps^{4a/(2a-dt)}, term2 ~ alpha^{s/(s+2a)}
    const double s = 1.3, a = 0.8, dt = 0.9;
    auto eps_exponent_term1 = [&](double x) {
      return x * (dt + 2 * a) / (dt - 2 * a) + 4 * a / (2 * a - dt);
    };
    auto eps_exponent_term2 = [&](double x) { return x * s / (s + 2 * a); };
    const double x = 2.0 * (s + 2.0 * a) / (2.0 * s + 2.0 * a + dt);  // alpha ~ eps^x
    CHECK(eps_exponent_term1(x) == doctest::Approx(eps_exponent_term2(x)).epsilon(1e-12));
    // and the common value is the advertised rate exponent
    CHECK(eps_exponent_term2(x) ==
          doctest::Approx(2.0 * s / (2.0 * s + 2.0 * a + dt)).epsilon(1e-12));
  }
}

TEST_CASE("subgradient exponent consistency of the deterministic rule") {
  // the conjugate-based choice alpha* ~ (delta^2)^{1-kappa}, kappa = s/(2(s+a)),
  // reproduces delta^{(s+2a)/(s+a)} exactly
  for (double s : {0.5, 1.0, 3.0})
    for (double a : {0.5, 1.0, 2.0}) {
      const double kappa = s / (2.0 * (s + a));
      const double exponent = 2.0 * (1.0 - kappa);
      CHECK(exponent == doctest::Approx((s + 2.0 * a) / (s + a)).epsilon(1e-13));
      const double delta = 0.037;
      CHECK(std::pow(delta * delta, 1.0 - kappa) ==
            doctest::Approx(choose_alpha_deterministic(delta, s, a)).epsilon(1e-12));
    }
}

TEST_CASE("solver rejects inconsistent configurations") {
  auto sys = WaveletSystem::daubechies(2, 4);
  auto model = conv_model(1.0, sys);
  const GridFunction g = random_grid(sys->signal_length(), 2);
  SolveConfig cfg;
  cfg.alpha = 0.0;
  CHECK_THROWS_AS((void)solve_tikhonov(*model, g, cfg), std::invalid_argument);
  cfg.alpha = 0.1;
  cfg.penalty_p = 3.0;
  CHECK_THROWS_AS((void)solve_tikhonov(*model, g, cfg), std::invalid_argument);
  cfg.penalty_p = 1.0;
  CHECK_THROWS_AS((void)solve_tikhonov(*model, GridFunction(8), cfg), std::invalid_argument);
}

TEST_CASE("oversized fixed step raises the step-rule error") {
  auto sys = WaveletSystem::meyer(6);
  auto model = conv_model(1.0, sys);
  const GridFunction g = random_grid(sys->signal_length(), 91);
  SolveConfig cfg;
  cfg.alpha = 1e-6;
  cfg.penalty_p = 2.0;
  cfg.initial_step = 100.0;  // far beyond 1/L
  cfg.tolerance = 1e-10;
  CHECK_THROWS_WITH_AS((void)solve_tikhonov(*model, g, cfg),
                       doctest::Contains("use backtracking"), std::runtime_error);
}

TEST_CASE("warm starts of the wrong shape are rejected") {
  auto sys = WaveletSystem::meyer(6);
  auto other = WaveletSystem::meyer(7);
  auto model = conv_model(1.0, sys);
  const GridFunction g = random_grid(sys->signal_length(), 44);
  SolveConfig cfg;
  cfg.alpha = 0.1;
  const CoeffField warm(other);
  CHECK_THROWS_AS((void)solve_tikhonov(*model, g, cfg, &warm), std::invalid_argument);
}
