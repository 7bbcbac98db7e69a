#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bwreg/analysis.hpp"
#include "bwreg/rate_study.hpp"
#include "bwreg/rng.hpp"

namespace {

using namespace bwreg;

std::vector<double> logspace(double lo, double hi, int count) {
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (int i = 0; i < count; ++i)
    g[i] = std::pow(10.0, llo + (lhi - llo) * i / (count - 1));
  return g;
}

struct CliOptions {
  std::string config;
  std::string out_dir = "out";
  std::string wavelet;
  std::string model;
  std::string label;
  std::uint64_t seed = 0;
  int levels = 0;
  int trim = -1;
  int replicates = 0;
  int grid_count = 0;
  double grid_min = 0.0, grid_max = 0.0;
  double s = 0.0, p = 0.0, a = 0.0, rho = 0.0, d_tilde = -1.0;
  double tolerance = 0.0;
  int max_iterations = 0;

  bool has_grid() const { return grid_min > 0.0 && grid_max > 0.0 && grid_count > 0; }
};

void add_common_flags(CLI::App* cmd, CliOptions* opt) {
  cmd->add_option("--config", opt->config, "JSON study configuration file");
  cmd->add_option("--seed", opt->seed, "random seed");
  cmd->add_option("--out-dir", opt->out_dir, "output directory");
  cmd->add_option("--levels", opt->levels, "dyadic resolution J (grid has 2^J points)");
  cmd->add_option("--wavelet", opt->wavelet, "wavelet family: dbN or meyer");
  cmd->add_option("--trim", opt->trim, "smallest grid points dropped from the slope fit");
  cmd->add_option("--model", opt->model, "forward model: conv or hammerstein");
  cmd->add_option("--label", opt->label, "output file prefix");
  cmd->add_option("--grid-min", opt->grid_min, "smallest grid value");
  cmd->add_option("--grid-max", opt->grid_max, "largest grid value");
  cmd->add_option("--grid-count", opt->grid_count, "number of grid points");
  cmd->add_option("--s", opt->s, "signal smoothness");
  cmd->add_option("--p", opt->p, "penalty exponent in [1,2]");
  cmd->add_option("--a", opt->a, "operator smoothing order");
  cmd->add_option("--rho", opt->rho, "signal ball radius");
  cmd->add_option("--d-tilde", opt->d_tilde, "noise smoothness deficit");
  cmd->add_option("--replicates", opt->replicates, "noise replicates per grid point");
  cmd->add_option("--tolerance", opt->tolerance, "solver first-order tolerance");
  cmd->add_option("--max-iter", opt->max_iterations, "solver iteration cap");
}

RateStudySpec base_spec_for(StudyKind kind) {
  RateStudySpec spec;
  spec.kind = kind;
  switch (kind) {
    case StudyKind::deterministic:
      spec.grid = logspace(1e-3, 1e-1, 8);
      spec.levels = 14;
      spec.slope_tolerance = 0.10;
      break;
    case StudyKind::exact_data:
      spec.grid = logspace(1e-5, 1e-1, 9);
      spec.levels = 12;
      spec.alpha_rule = "grid";
      spec.slope_tolerance = 0.08;
      break;
    case StudyKind::statistical:
      spec.grid = logspace(1e-4, 1e-2, 8);
      spec.levels = 12;
      spec.alpha_rule = "statistical";
      spec.replicates = 20;
      spec.slope_tolerance = 0.15;
      break;
    case StudyKind::tv:
      // the unit step carries a discrete (1,1,inf) norm of order 2^{J/2};
      // the noise grid lives on the data scale
      spec.grid = logspace(1e-1, 3.0, 10);
      spec.levels = 15;
      spec.wavelet = "db4";
      spec.signal = "step";
      spec.p = 1.0;
      spec.slope_tolerance = 0.12;
      break;
    case StudyKind::sparsity:
      spec.grid = logspace(1e-6, 1e-2, 10);
      spec.levels = 10;
      spec.solver_tolerance = 1e-10;
      spec.max_iterations = 200000;
      spec.alpha_rule = "grid";
      break;
    case StudyKind::converse:
      spec.grid = logspace(1e-4, 1e-1, 10);
      spec.levels = 10;
      spec.solver_tolerance = 1e-8;
      spec.alpha_rule = "grid";
      break;
    case StudyKind::vsc:
      spec.levels = 12;  // grid filled in after s, a, rho are known
      break;
    case StudyKind::lower_bound:
      spec.grid = logspace(1e-3, 1e-2, 10);
      spec.levels = 14;
      break;
  }
  return spec;
}

RateStudySpec build_spec(StudyKind kind, const CliOptions& opt) {
  RateStudySpec spec = base_spec_for(kind);
  if (!opt.config.empty()) {
    std::ifstream is(opt.config);
    if (!is) throw std::invalid_argument("cannot read config file: " + opt.config);
    std::stringstream buf;
    buf << is.rdbuf();
    spec = spec_from_json(buf.str());
    spec.kind = kind;
  }
  if (opt.seed) spec.seed = opt.seed;
  if (opt.levels) spec.levels = opt.levels;
  if (!opt.wavelet.empty()) spec.wavelet = opt.wavelet;
  if (!opt.model.empty()) spec.model = opt.model;
  if (!opt.label.empty()) spec.label = opt.label;
  if (opt.trim >= 0) spec.trim = opt.trim;
  if (opt.replicates) spec.replicates = opt.replicates;
  if (opt.s > 0.0) spec.s = opt.s;
  if (opt.p > 0.0) spec.p = opt.p;
  if (opt.a > 0.0) spec.a = opt.a;
  if (opt.rho > 0.0) spec.rho = opt.rho;
  if (opt.d_tilde >= 0.0) spec.d_tilde = opt.d_tilde;
  if (opt.tolerance > 0.0) spec.solver_tolerance = opt.tolerance;
  if (opt.max_iterations) spec.max_iterations = opt.max_iterations;
  if (opt.has_grid()) spec.grid = logspace(opt.grid_min, opt.grid_max, opt.grid_count);
  spec.out_dir = opt.out_dir;

  if (kind == StudyKind::vsc && spec.grid.empty()) {
    const double t_cap = std::pow(spec.s * spec.rho / spec.a, 2.0);
    spec.grid = logspace(t_cap * 1e-4, t_cap, 50);
  }
  return spec;
}

int run_slope_command(StudyKind kind, const CliOptions& opt) {
  const RateStudySpec spec = build_spec(kind, opt);
  const RateStudyResult result =
      (kind == StudyKind::tv) ? run_tv_study(spec) : run_rate_study(spec);
  const EmittedFiles files = emit_outputs(result, spec.out_dir);
  if (result.failed) {
    std::printf("[FAIL] %s: %s\n", to_string(kind).c_str(), result.failure_reason.c_str());
    return 1;
  }
  std::printf("[%s] %s: slope=%.4f +- %.4f target=%.4f tol=%.2f (%.1fs)\n",
              result.passed ? "PASS" : "FAIL", to_string(kind).c_str(), result.slope,
              result.slope_stderr, result.target, spec.slope_tolerance,
              result.elapsed_seconds);
  std::printf("  wrote %s and %s\n", files.csv_path.c_str(), files.manifest_path.c_str());
  return result.passed ? 0 : 1;
}

int run_sparsity_command(const CliOptions& opt) {
  const RateStudySpec spec = build_spec(StudyKind::sparsity, opt);
  const SparsityStudyResult result = run_sparsity_study(spec);
  const EmittedFiles files = emit_outputs(result, spec.out_dir);
  std::printf("[%s] sparsity: %zu solves, all blocks above the certified level vanish: %s (%.1fs)\n",
              result.passed ? "PASS" : "FAIL", result.rows.size(),
              result.passed ? "yes" : "no", result.elapsed_seconds);
  std::printf("  wrote %s and %s\n", files.csv_path.c_str(), files.manifest_path.c_str());
  return result.passed ? 0 : 1;
}

int run_converse_command(const CliOptions& opt) {
  const RateStudySpec spec = build_spec(StudyKind::converse, opt);
  const ConverseStudyResult result = run_converse_study(spec);
  const EmittedFiles files = emit_outputs(result, spec.out_dir);
  std::printf("[%s] converse: gamma=%.4f variation=%.3f bound_ratio=%.3f (%.1fs)\n",
              result.passed ? "PASS" : "FAIL", result.extended.gamma_hat,
              result.gamma_variation, result.bound_ratio, result.elapsed_seconds);
  std::printf("  wrote %s and %s\n", files.csv_path.c_str(), files.manifest_path.c_str());
  return result.passed ? 0 : 1;
}

int run_vsc_command(const CliOptions& opt) {
  const RateStudySpec spec = build_spec(StudyKind::vsc, opt);
  const VscStudyResult result = run_vsc_study(spec);
  const EmittedFiles files = emit_outputs(result, spec.out_dir);
  std::printf("[%s] vsc: %zu grid points, %d envelope violations (%.1fs)\n",
              result.passed ? "PASS" : "FAIL", result.points.size(), result.violations,
              result.elapsed_seconds);
  std::printf("  wrote %s and %s\n", files.csv_path.c_str(), files.manifest_path.c_str());
  return result.passed ? 0 : 1;
}

int run_lower_bound_command(const CliOptions& opt) {
  const RateStudySpec spec = build_spec(StudyKind::lower_bound, opt);
  const LowerBoundStudyResult result = run_lower_bound_study(spec);
  const EmittedFiles files = emit_outputs(result, spec.out_dir);
  std::printf("[%s] lower-bound: %zu probe pairs certified (%.1fs)\n",
              result.passed ? "PASS" : "FAIL", result.rows.size(), result.elapsed_seconds);
  std::printf("  wrote %s and %s\n", files.csv_path.c_str(), files.manifest_path.c_str());
  return result.passed ? 0 : 1;
}

int run_selftest() {
  int failures = 0;
  auto report = [&](const char* name, bool ok) {
    std::printf("[%s] selftest: %s\n", ok ? "PASS" : "FAIL", name);
    if (!ok) ++failures;
  };

  // round trip and isometry for both families
  for (const char* family : {"db4", "meyer"}) {
    auto sys = (std::string(family) == "meyer") ? WaveletSystem::meyer(8)
                                                : WaveletSystem::daubechies(4, 8);
    Rng rng(42);
    GridFunction g(sys->signal_length());
    for (auto& v : g.values) v = rng.normal();
    const CoeffField z = sys->analyze(g);
    const double rt = euclidean_norm(sys->synthesize(z) - g) / euclidean_norm(g);
    const double par = std::fabs(euclidean_norm(z) - euclidean_norm(g)) / euclidean_norm(g);
    report((std::string(family) + " round trip").c_str(), rt < 1e-10 && par < 1e-10);
  }

  // prox closed forms
  {
    const auto y1 = prox_block_lp(std::vector<double>{3.0, -0.5}, 1.0, 1.0);
    const auto y2 = prox_block_lp(std::vector<double>{3.0, 4.0}, 1.0, 2.0);
    report("prox closed forms", std::fabs(y1[0] - 2.0) < 1e-14 && y1[1] == 0.0 &&
                                    std::fabs(y2[0] - 2.4) < 1e-14 &&
                                    std::fabs(y2[1] - 3.2) < 1e-14);
  }

  // small solve reaches its certificate
  {
    auto sys = WaveletSystem::daubechies(2, 3);
    auto model = conv_model(1.0, sys);
    Rng rng(7);
    GridFunction g(sys->signal_length());
    for (auto& v : g.values) v = rng.normal();
    SolveConfig cfg;
    cfg.alpha = 0.05;
    cfg.penalty_p = 1.0;
    cfg.tolerance = 1e-12;
    const SolveResult sol = solve_tikhonov(*model, g, cfg);
    report("tiny solve converges", sol.converged && sol.optimality_residual < 1e-12);
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wavelet-Besov regularization experiments"};
  app.require_subcommand(1);

  CliOptions opt;
  struct Cmd {
    const char* name;
    const char* help;
    StudyKind kind;
  };
  const std::vector<Cmd> slope_cmds = {
      {"rate", "deterministic-noise convergence rate study", StudyKind::deterministic},
      {"exact", "exact-data convergence rate study", StudyKind::exact_data},
      {"stat", "white-noise convergence rate study", StudyKind::statistical},
      {"tv", "total-variation style study with a step-function truth", StudyKind::tv},
  };
  for (const Cmd& c : slope_cmds) add_common_flags(app.add_subcommand(c.name, c.help), &opt);
  add_common_flags(app.add_subcommand("sparsity", "certified zero tail levels"), &opt);
  add_common_flags(app.add_subcommand("converse", "rate-to-smoothness converse study"), &opt);
  add_common_flags(app.add_subcommand("vsc", "index function envelope study"), &opt);
  add_common_flags(app.add_subcommand("lower-bound", "worst-case spread probes"), &opt);
  app.add_subcommand("selftest", "quick internal consistency checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    for (const Cmd& c : slope_cmds)
      if (app.got_subcommand(c.name)) return run_slope_command(c.kind, opt);
    if (app.got_subcommand("sparsity")) return run_sparsity_command(opt);
    if (app.got_subcommand("converse")) return run_converse_command(opt);
    if (app.got_subcommand("vsc")) return run_vsc_command(opt);
    if (app.got_subcommand("lower-bound")) return run_lower_bound_command(opt);
    if (app.got_subcommand("selftest")) return run_selftest();
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "study failed: %s\n", e.what());
    return 1;
  }
  return 2;
}
