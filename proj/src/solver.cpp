#include "bwreg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "bwreg/besov.hpp"
#include "bwreg/fft.hpp"

namespace bwreg {

namespace {

// v + lam*q*v^{q-1} = b on (0,b]. Solved for w = ln v via Newton on
// G(w) = logsumexp(w, ln(lam q) + (q-1) w) - ln b, which is convex and
// increasing, so starting from the smaller single-term root keeps the
// iterates on the right of the solution and converges for any lam, q
// without overflow.
double shrink_component(double b, double log_lam_q, double q) {
  if (b <= 0.0) return 0.0;
  const double logb = std::log(b);
  double w = std::min(logb, (logb - log_lam_q) / (q - 1.0));
  for (int it = 0; it < 80; ++it) {
    const double first = w;
    const double second = log_lam_q + (q - 1.0) * w;
    const double top = std::max(first, second);
    const double rest = std::exp(std::min(first, second) - top);
    const double g = top + std::log1p(rest) - logb;
    const double share = (first >= second) ? 1.0 / (1.0 + rest) : rest / (1.0 + rest);
    const double dg = share + (q - 1.0) * (1.0 - share);
    const double step = g / dg;
    w -= step;
    if (std::fabs(step) < 1e-15) break;
  }
  return std::exp(w);
}

// Euclidean projection of x onto { ||u||_q <= tau }, q > 2, assuming the
// constraint is active. Bisection on the log of the multiplier.
std::vector<double> project_lq_ball(std::span<const double> x, double tau, double q) {
  const std::size_t m = x.size();
  std::vector<double> absx(m), v(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) absx[i] = std::fabs(x[i]);
  const double logq = std::log(q);
  auto log_norm_at = [&](double log_lam) {
    // returns ln ||v(lam)||_q, overflow-safe via a running max
    const double llq = log_lam + logq;
    double wmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      v[i] = shrink_component(absx[i], llq, q);
      if (v[i] > 0.0) wmax = std::max(wmax, std::log(v[i]));
    }
    if (wmax == -std::numeric_limits<double>::infinity()) return wmax;
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (v[i] > 0.0) s += std::exp(q * (std::log(v[i]) - wmax));
    return wmax + std::log(s) / q;
  };
  const double log_tau = std::log(tau);
  double t_lo = -60.0, t_hi = 0.0;
  while (log_norm_at(t_lo) <= log_tau && t_lo > -1e4) t_lo -= 60.0;
  while (log_norm_at(t_hi) > log_tau && t_hi < 1e4) t_hi += 60.0;
  for (int it = 0; it < 90; ++it) {
    const double mid = 0.5 * (t_lo + t_hi);
    if (log_norm_at(mid) > log_tau) t_lo = mid; else t_hi = mid;
    if (t_hi - t_lo < 1e-14) break;
  }
  log_norm_at(t_hi);  // feasible side
  for (std::size_t i = 0; i < m; ++i) v[i] = std::copysign(v[i], x[i]);
  return v;
}

double dual_exponent(double p) {
  if (p == 1.0) return kInfinity;
  if (p == kInfinity) return 1.0;
  return p / (p - 1.0);
}

}  // namespace

void prox_block_lp_inplace(std::span<double> x, double tau, double p) {
  if (tau < 0.0) throw std::invalid_argument("prox: tau must be >= 0");
  if (!(p >= 1.0 && p <= 2.0)) throw std::invalid_argument("prox: p must be in [1,2]");
  if (tau == 0.0 || x.empty()) return;
  if (p == 1.0) {
    for (double& v : x) {
      const double mag = std::fabs(v) - tau;
      v = (mag > 0.0) ? std::copysign(mag, v) : 0.0;
    }
    return;
  }
  if (p == 2.0) {
    double nrm = 0.0;
    for (double v : x) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (nrm <= tau) {
      std::fill(x.begin(), x.end(), 0.0);
    } else {
      const double factor = 1.0 - tau / nrm;
      for (double& v : x) v *= factor;
    }
    return;
  }
  const double q = dual_exponent(p);
  if (block_lp_norm(x, q) <= tau) {
    std::fill(x.begin(), x.end(), 0.0);
    return;
  }
  const std::vector<double> u = project_lq_ball(x, tau, q);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] -= u[i];
}

std::vector<double> prox_block_lp(std::span<const double> x, double tau, double p) {
  std::vector<double> y(x.begin(), x.end());
  prox_block_lp_inplace(y, tau, p);
  return y;
}

CoeffField prox_penalty(const CoeffField& z, double tau, double p) {
  if (tau < 0.0) throw std::invalid_argument("prox: tau must be >= 0");
  CoeffField out = z;
  for (int j = 0; j < out.level_count(); ++j)
    prox_block_lp_inplace(out.block(j), tau * level_weight(j, 0.0, p), p);
  return out;
}

double prox_subgradient_residual(std::span<const double> x, std::span<const double> y,
                                 double tau, double p) {
  std::vector<double> d(x.size());
  double ymax = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    d[i] = x[i] - y[i];
    ymax = std::max(ymax, std::fabs(y[i]));
  }
  if (tau == 0.0) {
    double m = 0.0;
    for (double v : d) m = std::max(m, std::fabs(v));
    return m / std::max(1.0, block_lp_norm(x, 2.0));
  }
  const double q = dual_exponent(p);
  const double feas = std::max(0.0, block_lp_norm(d, q) - tau) / tau;
  if (ymax == 0.0) return feas;
  double pair = 0.0;
  const double ny = block_lp_norm(y, p);
  for (std::size_t i = 0; i < d.size(); ++i) pair += d[i] * y[i];
  const double gap = std::fabs(pair - tau * ny) / (tau * std::max(ny, 1e-300));
  return std::max(feas, gap);
}

namespace {

class SmoothPart {
 public:
  virtual ~SmoothPart() = default;
  virtual double value(const CoeffField& z) = 0;
  virtual double value_and_grad(const CoeffField& z, CoeffField& grad) = 0;
  virtual double data_residual(const CoeffField& z) = 0;
};

class GenericSmooth final : public SmoothPart {
 public:
  GenericSmooth(const ForwardModel& model, GridFunction g_obs, bool stat)
      : model_(model), g_(std::move(g_obs)), stat_(stat) {}

  double value(const CoeffField& z) override { return misfit(model_.apply(synthesize(z))); }

  double value_and_grad(const CoeffField& z, CoeffField& grad) override {
    const GridFunction f = synthesize(z);
    const GridFunction img = model_.apply(f);
    const GridFunction r = img - g_;
    grad = model_.system()->analyze(model_.derivative_adjoint_apply(f, r));
    return misfit(img);
  }

  double data_residual(const CoeffField& z) override {
    return euclidean_norm(model_.apply(synthesize(z)) - g_);
  }

 private:
  double misfit(const GridFunction& img) const {
    if (!stat_) {
      double s = 0.0;
      for (std::size_t i = 0; i < img.size(); ++i) {
        const double d = img[i] - g_[i];
        s += d * d;
      }
      return 0.5 * s;
    }
    double s = 0.0, inner = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
      s += img[i] * img[i];
      inner += g_[i] * img[i];
    }
    return 0.5 * s - inner;
  }

  const ForwardModel& model_;
  GridFunction g_;
  bool stat_;
};

// Linear convolution: the whole iteration stays in coefficient/frequency
// space, no grid round trips.
class FourierSmooth final : public SmoothPart {
 public:
  FourierSmooth(const ConvolutionModel& model, const GridFunction& g_obs, bool stat)
      : model_(model), sys_(*model.system()), ghat_(unitary_fft(g_obs.values)), stat_(stat) {}

  double value(const CoeffField& z) override {
    const std::vector<cplx> shat = sys_.synthesize_spectrum(z);
    return misfit(shat);
  }

  double value_and_grad(const CoeffField& z, CoeffField& grad) override {
    std::vector<cplx> shat = sys_.synthesize_spectrum(z);
    const double val = misfit(shat);
    const auto& m = model_.multiplier();
    for (std::size_t i = 0; i < shat.size(); ++i)
      shat[i] = m[i] * (m[i] * shat[i] - ghat_[i]);
    grad = sys_.analyze_spectrum(std::move(shat));
    return val;
  }

  double data_residual(const CoeffField& z) override {
    const std::vector<cplx> shat = sys_.synthesize_spectrum(z);
    const auto& m = model_.multiplier();
    double s = 0.0;
    for (std::size_t i = 0; i < shat.size(); ++i) s += std::norm(m[i] * shat[i] - ghat_[i]);
    return std::sqrt(s);
  }

 private:
  double misfit(const std::vector<cplx>& shat) const {
    const auto& m = model_.multiplier();
    if (!stat_) {
      double s = 0.0;
      for (std::size_t i = 0; i < shat.size(); ++i) s += std::norm(m[i] * shat[i] - ghat_[i]);
      return 0.5 * s;
    }
    double s = 0.0, inner = 0.0;
    for (std::size_t i = 0; i < shat.size(); ++i) {
      const cplx img = m[i] * shat[i];
      s += std::norm(img);
      inner += (std::conj(ghat_[i]) * img).real();
    }
    return 0.5 * s - inner;
  }

  const ConvolutionModel& model_;
  const WaveletSystem& sys_;
  std::vector<cplx> ghat_;
  bool stat_;
};

double sq_distance(const CoeffField& a, const CoeffField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return s;
}

SolveResult run_solver(const ForwardModel& model, const GridFunction& g_obs,
                       const SolveConfig& cfg, const CoeffField* warm, bool stat) {
  if (!(cfg.alpha > 0.0)) throw std::invalid_argument("solve: alpha must be > 0");
  if (!(cfg.tolerance > 0.0)) throw std::invalid_argument("solve: tolerance must be > 0");
  if (!(cfg.penalty_p >= 1.0 && cfg.penalty_p <= 2.0))
    throw std::invalid_argument("solve: penalty exponent must be in [1,2]");
  const auto sys = model.system();
  if (static_cast<int>(g_obs.size()) != sys->signal_length())
    throw std::invalid_argument("solve: data length does not match model grid");

  std::unique_ptr<SmoothPart> smooth;
  const auto* conv = dynamic_cast<const ConvolutionModel*>(&model);
  if (conv)
    smooth = std::make_unique<FourierSmooth>(*conv, g_obs, stat);
  else
    smooth = std::make_unique<GenericSmooth>(model, g_obs, stat);

  if (warm && !warm->empty() && warm->system_ptr() != sys)
    throw std::invalid_argument("solve: warm start belongs to a different system");
  CoeffField z = (warm && !warm->empty()) ? *warm : CoeffField(sys);

  double eta;
  if (cfg.initial_step > 0.0) {
    eta = cfg.initial_step;
  } else if (conv) {
    double mmax = 0.0;
    for (double m : conv->multiplier()) mmax = std::max(mmax, std::fabs(m));
    eta = 1.0 / (mmax * mmax);
  } else {
    const double nrm = operator_norm_estimate(model, 50, cfg.seed);
    eta = 1.0 / (1.02 * nrm * nrm + 1e-300);
  }

  const double alpha = cfg.alpha;
  const double p = cfg.penalty_p;
  std::vector<double> weights(sys->level_count());
  for (int j = 0; j < sys->level_count(); ++j) weights[j] = level_weight(j, 0.0, p);

  const BesovIndex penalty_idx{0.0, p, 1.0};
  auto penalty = [&](const CoeffField& c) { return besov_norm(c, penalty_idx); };
  auto prox_step = [&](const CoeffField& base, const CoeffField& grad, double step,
                       CoeffField& out) {
    out = base;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= step * grad.data()[i];
    for (int j = 0; j < out.level_count(); ++j)
      prox_block_lp_inplace(out.block(j), alpha * step * weights[j], p);
  };
  // composite descent test for backtracking
  auto sufficient = [&](double s_new, double s_base, const CoeffField& grad,
                        const CoeffField& znew, const CoeffField& base, double step) {
    double lin = 0.0;
    for (std::size_t i = 0; i < znew.size(); ++i)
      lin += grad.data()[i] * (znew.data()[i] - base.data()[i]);
    const double quad = sq_distance(znew, base) / (2.0 * step);
    return s_new <= s_base + lin + quad + 1e-12 * (std::fabs(s_base) + 1.0);
  };

  CoeffField y = z, grad(sys), znew(sys), ztest(sys), grad2(sys);
  double t = 1.0;
  double obj = smooth->value(z) + alpha * penalty(z);
  if (!std::isfinite(obj)) throw std::runtime_error("solve: non-finite objective");

  SolveResult res;
  res.objective_trace.push_back(obj);
  double res_norm = std::numeric_limits<double>::infinity();
  const int check_every = std::max(1, cfg.check_interval);
  bool converged = false;
  int iterations = 0;

  for (int k = 1; k <= cfg.max_iterations; ++k) {
    iterations = k;
    // prox-gradient step from base, backtracking if configured
    auto take_step = [&](const CoeffField& base) {
      const double s_base = smooth->value_and_grad(base, grad);
      prox_step(base, grad, eta, znew);
      if (cfg.step_rule == StepRule::backtracking) {
        for (int bt = 0; bt < 60; ++bt) {
          const double s_new = smooth->value(znew);
          if (sufficient(s_new, s_base, grad, znew, base, eta)) return;
          eta *= cfg.backtrack_factor;
          prox_step(base, grad, eta, znew);
        }
        throw std::runtime_error("solve: backtracking failed to find a descent step");
      }
    };

    take_step(y);
    double obj_new = smooth->value(znew) + alpha * penalty(znew);
    if (!std::isfinite(obj_new)) throw std::runtime_error("solve: non-finite objective");

    const double margin = 1e-12 * (std::fabs(obj) + 1.0);
    const bool monotone = !cfg.accelerate || cfg.restart;
    if (obj_new > obj + margin && cfg.accelerate && cfg.restart) {
      // momentum overshoot: restart and redo as a plain step from z
      t = 1.0;
      take_step(z);
      obj_new = smooth->value(znew) + alpha * penalty(znew);
    }
    if (monotone && obj_new > obj + std::max(margin, 1e-9 * (std::fabs(obj) + 1.0))) {
      // a plain prox step cannot increase the objective unless the step
      // exceeds the curvature bound
      if (cfg.step_rule == StepRule::fixed)
        throw std::runtime_error(
            "solve: objective increased under the fixed step rule; use backtracking");
      throw std::runtime_error("solve: objective increased despite backtracking");
    }

    if (cfg.accelerate) {
      const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double coef = (t - 1.0) / tn;
      for (std::size_t i = 0; i < y.size(); ++i)
        y.data()[i] = znew.data()[i] + coef * (znew.data()[i] - z.data()[i]);
      t = tn;
    } else {
      y = znew;
    }
    z = znew;
    obj = obj_new;
    res.objective_trace.push_back(obj_new);

    if (k % check_every == 0 || k == cfg.max_iterations) {
      smooth->value_and_grad(z, grad2);
      prox_step(z, grad2, eta, ztest);
      res_norm = std::sqrt(sq_distance(z, ztest)) / eta;
      if (res_norm <= cfg.tolerance) {
        converged = true;
        break;
      }
    }
  }

  res.minimizer = z;
  res.iterations = iterations;
  res.converged = converged;
  res.optimality_residual = res_norm;
  res.objective = res.objective_trace.back();
  res.data_residual = smooth->data_residual(z);
  res.step = eta;
  res.zero_blocks.resize(sys->level_count());
  for (int j = 0; j < sys->level_count(); ++j) {
    bool allzero = true;
    for (double v : z.block(j))
      if (v != 0.0) { allzero = false; break; }
    res.zero_blocks[j] = allzero;
  }
  return res;
}

}  // namespace

SolveConfig default_config_for(const ForwardModel& model) {
  SolveConfig cfg;
  if (!model.is_linear()) {
    cfg.step_rule = StepRule::backtracking;
    cfg.accelerate = false;
    cfg.initial_step = 1.0;
  }
  return cfg;
}

SolveResult solve_tikhonov(const ForwardModel& model, const GridFunction& g_obs,
                           const SolveConfig& cfg, const CoeffField* warm_start) {
  return run_solver(model, g_obs, cfg, warm_start, /*stat=*/false);
}

SolveResult solve_tikhonov_stat(const ForwardModel& model, const GridFunction& g_obs,
                                const SolveConfig& cfg, const CoeffField* warm_start) {
  return run_solver(model, g_obs, cfg, warm_start, /*stat=*/true);
}

double choose_alpha_deterministic(double delta, double s, double a) {
  if (!(delta >= 0.0)) throw std::invalid_argument("alpha rule: delta must be >= 0");
  if (!(s > 0.0) || !(a > 0.0)) throw std::invalid_argument("alpha rule: s, a must be > 0");
  return std::pow(delta, (s + 2.0 * a) / (s + a));
}

double choose_alpha_statistical(double eps, double rho, double s, double a, double d_tilde) {
  if (!(eps >= 0.0)) throw std::invalid_argument("alpha rule: eps must be >= 0");
  if (!(rho > 0.0)) throw std::invalid_argument("alpha rule: rho must be > 0");
  if (!(s > 0.0) || !(a > 0.0)) throw std::invalid_argument("alpha rule: s, a must be > 0");
  if (!(d_tilde >= 0.0 && d_tilde < 2.0 * a))
    throw std::invalid_argument("alpha rule: d_tilde must lie in [0, 2a)");
  const double denom = 2.0 * s + 2.0 * a + d_tilde;
  return std::pow(eps, 2.0 * (s + 2.0 * a) / denom) *
         std::pow(rho, -(2.0 * a - d_tilde) / denom);
}

}  // namespace bwreg
