#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "bwreg/besov.hpp"
#include "bwreg/grid_function.hpp"
#include "bwreg/wavelet.hpp"

namespace bwreg {

// Forward map F with derivative action and its exact discrete adjoint.
// Models are immutable after construction; all member calls are pure.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual double smoothing_order() const = 0;  // a
  virtual bool is_linear() const = 0;
  virtual std::string name() const = 0;
  virtual std::shared_ptr<const WaveletSystem> system() const = 0;

  virtual GridFunction apply(const GridFunction& f) const = 0;
  virtual GridFunction derivative_apply(const GridFunction& f, const GridFunction& h) const = 0;
  virtual GridFunction derivative_adjoint_apply(const GridFunction& f, const GridFunction& r) const = 0;
};

// Periodic convolution, Fourier multiplier (1+n^2)^{-a/2}; self-adjoint and
// positive, exactly a-times smoothing.
class ConvolutionModel final : public ForwardModel {
 public:
  ConvolutionModel(double a, std::shared_ptr<const WaveletSystem> sys);

  double smoothing_order() const override { return a_; }
  bool is_linear() const override { return true; }
  std::string name() const override;
  std::shared_ptr<const WaveletSystem> system() const override { return sys_; }

  GridFunction apply(const GridFunction& f) const override;
  GridFunction derivative_apply(const GridFunction&, const GridFunction& h) const override;
  GridFunction derivative_adjoint_apply(const GridFunction&, const GridFunction& r) const override;

  const std::vector<double>& multiplier() const { return multiplier_; }

 private:
  double a_;
  std::shared_ptr<const WaveletSystem> sys_;
  std::vector<double> multiplier_;
};

struct ScalarFunction {
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> ddf;
  std::string name;
};

// phi(x) = x + atan(x)/2, monotone with phi' in (1, 3/2].
ScalarFunction default_hammerstein_phi();

// (F f)(t) = int_0^t phi(f(s)) ds via cumulative trapezoid; the adjoint of
// the derivative is the exact transpose of that quadrature. One-smoothing.
class HammersteinModel final : public ForwardModel {
 public:
  HammersteinModel(ScalarFunction phi, std::shared_ptr<const WaveletSystem> sys);

  double smoothing_order() const override { return 1.0; }
  bool is_linear() const override { return false; }
  std::string name() const override { return "hammerstein(" + phi_.name + ")"; }
  std::shared_ptr<const WaveletSystem> system() const override { return sys_; }

  GridFunction apply(const GridFunction& f) const override;
  GridFunction derivative_apply(const GridFunction& f, const GridFunction& h) const override;
  GridFunction derivative_adjoint_apply(const GridFunction& f, const GridFunction& r) const override;

 private:
  ScalarFunction phi_;
  std::shared_ptr<const WaveletSystem> sys_;
};

std::shared_ptr<const ForwardModel> conv_model(double a, std::shared_ptr<const WaveletSystem> sys);
std::shared_ptr<const ForwardModel> hammerstein_model(ScalarFunction phi,
                                                      std::shared_ptr<const WaveletSystem> sys);

struct SmoothingConstants {
  double l1_hat = 0.0;   // max ||f1-f2||_{-a,2,2} / ||F f1 - F f2||
  double l2_hat = 0.0;   // max ||F f1 - F f2|| / ||f1-f2||_{-a,2,2}
  double l1_exact = 0.0; // dense reference for small linear models, 0 if n/a
  double l2_exact = 0.0;
  int sample_count = 0;
  std::string notes;
};

// Ratio extremes over random pairs plus deterministic per-level probes.
SmoothingConstants estimate_smoothing_constants(const ForwardModel& model, int trials,
                                                std::uint64_t seed);

// ||F'[f0] W*|| by power iteration on the normal map in coefficient space.
double operator_norm_estimate(const ForwardModel& model, int iterations, std::uint64_t seed,
                              const GridFunction* linearization = nullptr);

// Largest singular value of F'[f0] restricted to one coefficient level.
double level_restricted_operator_norm(const ForwardModel& model, int level, int iterations,
                                      std::uint64_t seed,
                                      const GridFunction* linearization = nullptr);

// K = max_j 2^{j a} sigma_j, the operator norm from the (-a,2,1) ball: its
// extreme points are single-level fields, so per-level power iterations are
// exact up to power-method convergence.
double sparsity_operator_constant(const ForwardModel& model, int iterations, std::uint64_t seed,
                                  const GridFunction* linearization = nullptr);

// Sampled data-side constants: first maps coefficient differences through F
// and the data-side transform at smoothness a (ratio against (0,p,1)), the
// second inverts at smoothness s+a (ratio of (s,p,inf) against (s+a,p,inf)).
std::pair<double, double> estimate_data_side_constants(const ForwardModel& model, double s,
                                                       double p, int trials, std::uint64_t seed);

}  // namespace bwreg
