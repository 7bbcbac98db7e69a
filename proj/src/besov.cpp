#include "bwreg/besov.hpp"

#include <cmath>
#include <stdexcept>

#include "bwreg/rng.hpp"

namespace bwreg {

namespace {

// Kahan-compensated accumulator; the level weights span 2^{+-Js} so naive
// summation loses digits exactly where the invariant tests look.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    double y = v - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

void validate(const BesovIndex& idx) {
  if (!(idx.p >= 1.0)) throw std::invalid_argument("besov index: p must be >= 1");
  if (!(idx.q >= 1.0)) throw std::invalid_argument("besov index: q must be >= 1");
  if (!std::isfinite(idx.s)) throw std::invalid_argument("besov index: s must be finite");
}

double block_lp_norm(std::span<const double> block, double p) {
  if (p == kInfinity) {
    double m = 0.0;
    for (double v : block) m = std::max(m, std::fabs(v));
    return m;
  }
  if (p == 1.0) {
    CompensatedSum acc;
    for (double v : block) acc.add(std::fabs(v));
    return acc.sum;
  }
  if (p == 2.0) {
    double s = 0.0;
    for (double v : block) s += v * v;
    return std::sqrt(s);
  }
  // max-normalized power sum; plain accumulation overflows for large p
  double m = 0.0;
  for (double v : block) m = std::max(m, std::fabs(v));
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (double v : block) s += std::pow(std::fabs(v) / m, p);
  return m * std::pow(s, 1.0 / p);
}

double level_weight(int j, double s, double p) {
  const double inv_p = (p == kInfinity) ? 0.0 : 1.0 / p;
  return std::exp2(static_cast<double>(j) * (s + 0.5 - inv_p));
}

double besov_norm(const CoeffField& z, const BesovIndex& idx) {
  validate(idx);
  const int levels = z.level_count();
  if (idx.q == kInfinity) {
    double m = 0.0;
    for (int j = 0; j < levels; ++j)
      m = std::max(m, level_weight(j, idx.s, idx.p) * block_lp_norm(z.block(j), idx.p));
    return m;
  }
  if (idx.q == 1.0) {
    CompensatedSum acc;
    for (int j = 0; j < levels; ++j)
      acc.add(level_weight(j, idx.s, idx.p) * block_lp_norm(z.block(j), idx.p));
    return acc.sum;
  }
  double s = 0.0;
  for (int j = 0; j < levels; ++j)
    s += std::pow(level_weight(j, idx.s, idx.p) * block_lp_norm(z.block(j), idx.p), idx.q);
  return std::pow(s, 1.0 / idx.q);
}

double seminorm_pn(const CoeffField& z, int level, double p) {
  if (level < 0 || level >= z.level_count())
    throw std::out_of_range("seminorm level out of range");
  CompensatedSum acc;
  for (int j = 0; j <= level; ++j)
    acc.add(level_weight(j, 0.0, p) * block_lp_norm(z.block(j), p));
  return acc.sum;
}

double seminorm_pn_perp(const CoeffField& z, int level, double p) {
  if (level < 0 || level >= z.level_count())
    throw std::out_of_range("seminorm level out of range");
  CompensatedSum acc;
  for (int j = level + 1; j < z.level_count(); ++j)
    acc.add(level_weight(j, 0.0, p) * block_lp_norm(z.block(j), p));
  return acc.sum;
}

CoeffField make_extremal(const std::shared_ptr<const WaveletSystem>& sys,
                         const BallSpec& ball, std::uint64_t seed, double decay) {
  validate(ball.index);
  if (ball.index.q != kInfinity)
    throw std::invalid_argument("make_extremal: ball fine index q must be infinity");
  if (!(ball.radius >= 0.0)) throw std::invalid_argument("make_extremal: radius must be >= 0");
  if (decay < 0.0) throw std::invalid_argument("make_extremal: decay must be >= 0");

  CoeffField z(sys);
  Rng rng(seed);
  const double s = ball.index.s;
  const double p = ball.index.p;
  const double inv_p = (p == kInfinity) ? 0.0 : 1.0 / p;
  for (int j = 0; j < z.level_count(); ++j) {
    auto blk = z.block(j);
    const double level_target = ball.radius * std::exp2(-decay * j);
    // equal magnitudes: weight * magnitude * |Lambda_j|^{1/p} = target
    const double magnitude = level_target /
        (level_weight(j, s, p) * std::pow(static_cast<double>(blk.size()), inv_p));
    for (double& v : blk) v = rng.sign() * magnitude;
  }
  if (!ball.center.empty()) {
    if (ball.center.size() != z.size())
      throw std::invalid_argument("make_extremal: center shape mismatch");
    for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] += ball.center.data()[i];
  }
  return z;
}

CoeffField lower_bound_probe(const std::shared_ptr<const WaveletSystem>& sys,
                             int level, double s, double p, double a,
                             double rho, double delta, double l2) {
  if (level < 0 || level > sys->max_level())
    throw std::out_of_range("probe level out of range");
  if (!(rho >= 0.0) || !(delta > 0.0) || !(l2 > 0.0))
    throw std::invalid_argument("lower_bound_probe: rho, delta, l2 must be positive");
  (void)p;  // the probe itself does not depend on p, only its certified norms do
  const double c_frame = sys->frame_constant();
  const double beta = (1.0 / c_frame) * std::exp2(-0.5 * level) *
      std::min(std::exp2(-s * level) * rho, std::exp2(a * level) * delta / l2);
  CoeffField z(sys);
  for (double& v : z.block(level)) v = beta;
  return z;
}

}  // namespace bwreg
