#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bwreg/analysis.hpp"
#include "bwreg/besov.hpp"
#include "bwreg/operators.hpp"
#include "bwreg/solver.hpp"

namespace bwreg {

enum class StudyKind {
  deterministic,  // delta grid, ||.||-bounded noise, slope vs s/(s+a)
  exact_data,     // alpha grid, exact data, slope vs s/(s+2a)
  statistical,    // eps grid, white noise replicates, slope vs 2s/(2a+2s+dt)
  tv,             // delta grid, p=1, step-function truth, L1 slope vs 1/(1+a)
  sparsity,       // guaranteed zero tail levels of certified minimizers
  converse,       // gamma stability and the smoothness bound from the rate
  vsc,            // index function table against its power-law envelope
  lower_bound     // probe certificates for the worst-case spread
};

std::string to_string(StudyKind kind);
StudyKind study_kind_from_string(const std::string& name);

struct RateStudySpec {
  StudyKind kind = StudyKind::deterministic;

  std::string model = "conv";  // conv | hammerstein
  double a = 1.0;
  std::string phi = "default";

  std::string signal = "extremal";  // extremal | step
  double s = 1.0;
  double p = 2.0;
  double rho = 1.0;
  double signal_decay = 0.0;
  std::uint64_t seed = 1;

  std::string wavelet = "meyer";  // meyer | db<N>
  int levels = 10;

  std::vector<double> grid;  // delta / alpha / eps, ascending
  std::string alpha_rule = "deterministic";  // deterministic | statistical | grid
  double d_tilde = 1.0;
  int replicates = 1;
  int trim = 0;  // smallest grid points dropped from the fit

  double slope_tolerance = 0.1;

  double solver_tolerance = 1e-6;
  int max_iterations = 50000;

  std::string out_dir = ".";
  std::string label;  // output file prefix; defaults to the kind name

  bool operator==(const RateStudySpec&) const = default;
};

std::string spec_to_json(const RateStudySpec& spec);
RateStudySpec spec_from_json(const std::string& json_text);

struct GridPointRecord {
  double noise = 0.0;  // delta / alpha / eps
  double alpha = 0.0;
  double error_penalty = 0.0;  // ||fhat - f||_{0,p,1}, replicate mean
  double error_lp = 0.0;       // Riemann L^p surrogate on the grid
  double residual = 0.0;
  double optimality = 0.0;
  int iterations = 0;
  int sparsity_level = 0;  // first level of the exact-zero tail
  bool converged = true;
};

struct RateStudyResult {
  RateStudySpec spec;
  std::vector<GridPointRecord> points;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double target = 0.0;
  bool passed = false;
  bool failed = false;
  std::string failure_reason;
  int excluded = 0;
  double rho_eff = 0.0;
  bool warm_started = false;
  double elapsed_seconds = 0.0;
};

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
};
// OLS on (log x, log y); needs at least 4 points.
SlopeFit fit_slope(std::span<const double> xs, std::span<const double> ys);

double target_slope(const RateStudySpec& spec);

// 2^{-J s} rho must sit below a tenth of the smallest resolvable scale. For
// noise-free (exact data) studies the scale is the predicted error at the
// smallest alpha.
void check_truncation_guard(const RateStudySpec& spec, double rho_eff);
int min_levels_for_guard(double s, double rho, double min_noise);

RateStudyResult run_rate_study(const RateStudySpec& spec);
RateStudyResult run_tv_study(const RateStudySpec& spec);

struct SparsityStudyRow {
  double p = 1.0;
  double alpha = 0.0;
  double residual = 0.0;
  double k_const = 0.0;
  int j_star = 0;
  int iterations = 0;
  double worst_abs = 0.0;
  bool ok = false;
};
struct SparsityStudyResult {
  RateStudySpec spec;
  std::vector<SparsityStudyRow> rows;
  bool passed = false;
  double elapsed_seconds = 0.0;
};
SparsityStudyResult run_sparsity_study(const RateStudySpec& spec);

struct ConverseStudyResult {
  RateStudySpec spec;
  ConverseResult base;
  ConverseResult extended;  // alpha grid one decade further down
  double gamma_variation = 0.0;   // |gamma_ext - gamma_base| / gamma_base
  double bound_ratio = 0.0;       // smoothness_bound / rho
  bool passed = false;
  double elapsed_seconds = 0.0;
};
ConverseStudyResult run_converse_study(const RateStudySpec& spec);

struct VscStudyPoint {
  double t = 0.0;
  double phi = 0.0;
  double envelope = 0.0;
  int minimizing_level = 0;
};
struct VscStudyResult {
  RateStudySpec spec;
  std::vector<VscStudyPoint> points;
  double c_tilde = 0.0;
  double c_envelope = 0.0;
  double c_phi = 0.0;
  double l1_hat = 0.0;
  double l2_hat = 0.0;
  double rho_eff = 0.0;
  int violations = 0;
  bool passed = false;
  double elapsed_seconds = 0.0;
};
VscStudyResult run_vsc_study(const RateStudySpec& spec);

struct LowerBoundStudyRow {
  double rho = 0.0;
  double delta = 0.0;
  ProbeCertificate cert;
  bool ok = false;
};
struct LowerBoundStudyResult {
  RateStudySpec spec;
  std::vector<LowerBoundStudyRow> rows;
  double l2_hat = 0.0;
  bool passed = false;
  double elapsed_seconds = 0.0;
};
LowerBoundStudyResult run_lower_bound_study(const RateStudySpec& spec);

struct EmittedFiles {
  std::string csv_path;
  std::string manifest_path;
};
EmittedFiles emit_outputs(const RateStudyResult& result, const std::string& out_dir);
EmittedFiles emit_outputs(const SparsityStudyResult& result, const std::string& out_dir);
EmittedFiles emit_outputs(const ConverseStudyResult& result, const std::string& out_dir);
EmittedFiles emit_outputs(const VscStudyResult& result, const std::string& out_dir);
EmittedFiles emit_outputs(const LowerBoundStudyResult& result, const std::string& out_dir);

// Worker count: BWREG_THREADS if set, else 1. Warm starts across the grid
// are only chained in single-thread runs so results never depend on
// scheduling.
int configured_thread_count();

std::shared_ptr<const WaveletSystem> make_system(const RateStudySpec& spec);
std::shared_ptr<const ForwardModel> make_model(const RateStudySpec& spec,
                                               std::shared_ptr<const WaveletSystem> sys);
CoeffField make_signal(const RateStudySpec& spec,
                       const std::shared_ptr<const WaveletSystem>& sys);

}  // namespace bwreg
