#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bwreg/besov.hpp"
#include "bwreg/linalg.hpp"
#include "bwreg/operators.hpp"
#include "bwreg/solver.hpp"

namespace bwreg {

// Constants feeding the approximation-error index function
//   phi(t) = C~ min_n ( 2^{a(n+1)} sqrt(t) + 2^{-s(n+1)} rho ).
struct IndexFunctionSpec {
  double l1 = 1.0;  // lower-Lipschitz constant of the forward map
  double a = 1.0;
  double s = 1.0;
  double p = 2.0;
  double rho = 1.0;
  std::vector<double> t_grid;
};
void validate(const IndexFunctionSpec& spec);

double vsc_c_tilde(double s, double a, double l1);

struct VscPoint {
  double t = 0.0;
  double phi = 0.0;
  int minimizing_level = 0;
};

double vsc_phi_value(double t, double rho_eff, double s, double a, double c_tilde,
                     int max_level, int* argmin = nullptr);
std::vector<VscPoint> vsc_phi(const CoeffField& f_true, const IndexFunctionSpec& spec);

// Envelope constant: phi(t) <= c rho^{a/(s+a)} t^{s/(2(s+a))} on (0,(s rho/a)^2].
double vsc_envelope_constant(double s, double a, double c_tilde);
// Global power-law constant (branch maximum over the envelope and the
// large-misfit correction with K = 4 l2 (1-2^{-s})^{-1}).
double consolidated_cphi(double s, double a, double l1, double l2);

// psi(t) = C_psi rho^{2a/(s+2a)} t^{s/(s+2a)}, C_psi from the closed-form
// conjugate of -c_phi rho^{a/(s+a)} t^{kappa}, kappa = s/(2(s+a)).
double fenchel_psi(double c_phi, double rho, double s, double a, double t);

// Least level with (K/alpha) * residual < 2^{j (a + d/pt - d/p)}; all blocks
// at and above it must vanish exactly in a certified minimizer.
int sparsity_level_bound(double k, double alpha, double residual, double a, double d,
                         double p, double p_tilde);

struct SparsityReport {
  bool passed = true;
  int first_level = 0;   // first level checked (j*)
  int worst_level = -1;
  double worst_abs = 0.0;
};
SparsityReport verify_sparsity(const SolveResult& result, int j_star, double zero_tol,
                               double scale = 1.0);

struct ConversePoint {
  double alpha = 0.0;
  double error = 0.0;       // ||f_alpha - f_true||_{0,p,1}
  double rate_ratio = 0.0;  // alpha^{-s/(s+2a)} * error
};
struct ConverseResult {
  double gamma_hat = 0.0;
  double smoothness_bound = 0.0;   // (sqrt(2) K)^{s/a} gamma^{(2a+s)/(2a)}
  double direct_smoothness = 0.0;  // ||f_true||_{s,p,inf} computed directly
  double k_used = 0.0;
  std::vector<ConversePoint> points;
};
ConverseResult converse_gamma(const ForwardModel& model, const CoeffField& f_true,
                              std::span<const double> alpha_grid, double s, double a, double p,
                              const SolveConfig& base_cfg);

struct ProbeCertificate {
  int level = 0;
  double beta = 0.0;
  double loss_norm = 0.0;       // ||f_j||_{0,p,1}
  double image_distance = 0.0;  // ||F(center + f_j) - F(center)||
  double certified_bound = 0.0; // includes the |Lambda_j| = 2^{j-1} factor
  double nominal_bound = 0.0;   // the bound with the full 2^j count
  bool image_ok = false;
};
// Optimal-level probe for the worst-case spread at noise budget delta;
// requires delta < rho * l2.
ProbeCertificate modulus_lower_bound(const ForwardModel& model, double delta, double s,
                                     double p, double rho, double l2,
                                     const CoeffField* center = nullptr);

struct AdjointRangeCertificate {
  double nu_direct = 0.0;      // sup ||P_n f|| / ||T f||
  double nu_dual_basis = 0.0;  // max_i || min-norm solution of T* psi = e_i ||
  double nu_dual_sup = 0.0;    // sup over unit xi in range(P_n*)
  double worst_solve_residual = 0.0;
  bool equivalent = false;
};
// Euclidean instance of the projection-bound / adjoint-range equivalence:
// the direct constant from the spectrum of the restricted normal equations,
// the dual one from min-norm solves, checked against each other.
AdjointRangeCertificate adjoint_range_check(const Matrix& t, int n, double tol);

struct NoiseSpec {
  enum class Mode { deterministic, statistical };
  Mode mode = Mode::deterministic;
  double level = 0.0;    // delta or eps
  double d_tilde = 1.0;  // statistical smoothness deficit, in [0, 2a)
  double p_prime = 2.0;  // dual exponent of the penalty p
  std::uint64_t seed = 1;
};
void validate(const NoiseSpec& spec, double a);

double noise_besov_norm(const GridFunction& z, double d_tilde, double p_prime,
                        const WaveletSystem& data_sys);

// ||g||_{(s,p,1)} / ( ||g||_2^{1-s/a} ||g||_{(a,p,1)}^{s/a} ); 0 for g = 0.
double interpolation_check(const GridFunction& g, double s, double a, double p,
                           const WaveletSystem& data_sys);

// eps * Z with iid standard normal samples scaled by 1/sqrt(h), so the
// continuum pairing <Z, phi> has variance ||phi||_{L^2}^2.
GridFunction sample_white_noise(double eps, const WaveletSystem& data_sys, std::uint64_t seed);

struct ErrorChainReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};
// 0.5 ||fhat-f||_{0,p,1} <= delta^2/(2 alpha) + psi(4 alpha)
ErrorChainReport deterministic_error_chain(double err_x, double delta, double alpha,
                                           double c_phi, double rho, double s, double a);
// ||F fhat - g||^2 <= 4 delta^2 + 8 alpha psi(8 alpha)
ErrorChainReport image_error_chain(double img_err, double delta, double alpha, double c_phi,
                                   double rho, double s, double a);

}  // namespace bwreg
