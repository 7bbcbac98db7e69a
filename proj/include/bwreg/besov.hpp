#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>

#include "bwreg/wavelet.hpp"

namespace bwreg {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Smoothness / integrability / fine index of a dyadic sequence norm. The
// level weight in dimension one is 2^{j s} 2^{j (1/2 - 1/p)}.
struct BesovIndex {
  double s = 0.0;
  double p = 2.0;
  double q = 2.0;
};

void validate(const BesovIndex& idx);

struct BallSpec {
  BesovIndex index;   // q must be infinity
  double radius = 1.0;
  CoeffField center;  // empty means zero
};

// ell^p norm of one block, p = inf allowed. Compensated summation for p = 1.
double block_lp_norm(std::span<const double> block, double p);

// 2^{j s + j(1/2 - 1/p)}; the per-level weight at s = 0 reappears as the
// prox threshold scaling in the solver.
double level_weight(int j, double s, double p);

double besov_norm(const CoeffField& z, const BesovIndex& idx);

// Partial sum of the (0,p,1) series through the given level, and its tail.
double seminorm_pn(const CoeffField& z, int level, double p);
double seminorm_pn_perp(const CoeffField& z, int level, double p);

// Field on the boundary of the ball: every level attains the (s,p,inf) level
// norm radius (or radius * 2^{-decay*j} with a positive decay).
CoeffField make_extremal(const std::shared_ptr<const WaveletSystem>& sys,
                         const BallSpec& ball, std::uint64_t seed,
                         double decay = 0.0);

// Single-level constant-magnitude field used by the worst-case spread
// certificates: block j filled with
//   beta = C^{-1} 2^{-j/2} min(2^{-j s} rho, 2^{j a} delta / l2).
CoeffField lower_bound_probe(const std::shared_ptr<const WaveletSystem>& sys,
                             int level, double s, double p, double a,
                             double rho, double delta, double l2);

}  // namespace bwreg
