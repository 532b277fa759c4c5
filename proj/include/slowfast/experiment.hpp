#pragma once

// Experiment configuration and the orchestration behind the command-line
// subcommands: convergence study, diagnostics, condition checks, Fbar
// inspection and single-trajectory dumps.
//
// Config files are flat text, one `key = value` per line, `#` starts a
// comment, lists are comma-separated. Unknown keys are rejected.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "slowfast/averaging.hpp"
#include "slowfast/conditions.hpp"
#include "slowfast/integrators.hpp"
#include "slowfast/khasminskii.hpp"
#include "slowfast/stats.hpp"

namespace slowfast {

struct ExperimentConfig {
  // model
  std::string slow = "burgers";  // burgers | porous_medium | p_laplace
  double slow_p = 3.0;
  double slow_c = 1.0;
  double slow_viscosity = 0.1;
  std::string fast = "linear";  // linear | smooth
  double fast_c_b = 1.0;
  double fast_b = 1.0;
  double f0_amplitude = 1.0;
  double c_fx = -0.5;
  double c_fy = 1.0;
  NoiseSpec g1{0.5, 8, 0.0};
  NoiseSpec g2{1.0, 8, 0.0};
  std::size_t n_interior = 64;
  double x0_amplitude = 1.0;
  double y0_amplitude = 0.0;

  // convergence study
  std::vector<double> epsilon_grid{0.1, 0.05, 0.02, 0.01};
  std::string delta_rule = "power";  // power | fixed
  double delta_c = 1.0;
  double delta_a = 2.0 / 3.0;
  double delta_fixed = 0.0625;
  std::size_t replicas = 100;
  double T = 1.0;
  SchemeParams scheme;
  std::uint64_t master_seed = 20240611;
  std::filesystem::path output_dir = "out";
  std::string fbar_mode = "auto";  // auto | oracle | estimate
  std::size_t fbar_replicas = 8;

  // diagnostics
  std::vector<double> diagnose_deltas{0.125, 0.0625, 0.03125, 0.015625, 0.0078125};
  std::vector<double> diagnose_epsilon_grid;  // empty: epsilon_grid
  double diagnose_fixed_delta = 0.03125;
  std::vector<double> diagnose_b_scan{0.0, 1.0, 2.0, 4.0};
  std::size_t diagnose_decay_replicas = 8;

  // fbar / simulate / check
  double fbar_t_burn = 0.0;  // <= 0: default 8/margin
  double fbar_t_avg = 0.0;   // <= 0: default 50/margin
  double simulate_epsilon = 0.0;  // <= 0: last entry of epsilon_grid
  std::size_t check_samples = 500;

  /// Throws ConfigError on any inconsistent value.
  void validate() const;
  /// delta(eps) from the delta rule.
  double delta_for(double epsilon) const;
  const std::vector<double>& diagnostics_epsilons() const {
    return diagnose_epsilon_grid.empty() ? epsilon_grid : diagnose_epsilon_grid;
  }
};

/// Throws ConfigError on syntax errors, unknown keys or bad values.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

Grid1D config_grid(const ExperimentConfig& config);
SlowOperatorSpec config_slow(const ExperimentConfig& config);
FastOperatorSpec config_fast(const ExperimentConfig& config);
CouplingSpec config_coupling(const ExperimentConfig& config, const Grid1D& grid);
/// Model at the given eps; x0 and y0 are amplitude * sin(pi x).
ModelSpec build_model(const ExperimentConfig& config, double epsilon);

struct ConvergenceRow {
  double epsilon = 0.0;
  double delta = 0.0;
  double error_mean = 0.0;
  double error_stderr = 0.0;
  std::size_t replicas = 0;
  double wall_time_s = 0.0;
  bool valid = true;
  std::string note;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;
  std::optional<LinearFit> fit;  // log error against log eps
  std::string fit_note;          // reason when the fit is skipped
  bool strictly_decreasing = false;
  bool degenerate = false;  // every error <= 1e-12
  bool numerical_failure = false;
  bool passed = false;
};

/// Coupled and averaged runs per eps over `replicas` paths that share slow
/// noise streams across eps. Fbar is the closed form for OU models (or when
/// fbar_mode = oracle), otherwise the memoized Monte Carlo estimator.
ConvergenceResult run_convergence(const ExperimentConfig& config);

struct SuiteRow {
  std::string suite;
  double param = 0.0;
  double value_mean = 0.0;
  double value_stderr = 0.0;
  std::size_t replicas = 0;
};

struct SuiteVerdict {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct DiagnosticsResult {
  std::vector<SuiteRow> moment;       // param eps
  std::vector<SuiteRow> increment;    // param delta, at the smallest diagnostic eps
  std::vector<SuiteRow> deviation;    // suite "deviation" (param delta) then "deviation_eps" (param eps)
  std::vector<SuiteRow> ergodicity;   // param b of the smooth fast drift
  std::vector<KhasminskiiRow> khasminskii;  // deviation for every (delta, eps)
  std::vector<SuiteVerdict> verdicts;
  bool passed = false;
};

/// Moment uniformity, increment scaling, deviation scaling and contraction
/// suites, judged against fixed thresholds (see verdict details).
DiagnosticsResult run_diagnostics(const ExperimentConfig& config);

struct ConditionsResult {
  std::vector<ConditionReport> reports;
  bool passed = false;  // no violations
};

/// All slow and fast conditions on the configured model. The dissipativity
/// margin is not enforced up front so that a nonpositive margin shows up as
/// a violation.
ConditionsResult run_check_conditions(const ExperimentConfig& config);

struct FbarComparison {
  FbarEstimate estimate;
  std::optional<Field> oracle;
  double max_z = 0.0;  // max_i |estimate - oracle| / std_error, when the oracle exists
};

/// Fbar at the configured x0 for the smallest eps of the grid.
FbarComparison run_fbar(const ExperimentConfig& config);

/// One coupled trajectory at simulate_epsilon; replays `noise_in` when given.
CoupledRun run_simulate(const ExperimentConfig& config, const NoisePath* noise_in);

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows);
void write_suite_csv(std::ostream& out, const std::vector<SuiteRow>& rows);
void write_conditions_csv(std::ostream& out, const std::vector<ConditionReport>& reports);
void write_trajectory_csv(std::ostream& out, const CoupledRun& run);

void write_convergence_report(std::ostream& out, const ExperimentConfig& config, const ConvergenceResult& result);
void write_diagnostics_report(std::ostream& out, const DiagnosticsResult& result);
void write_conditions_report(std::ostream& out, const ConditionsResult& result);

/// Process exit codes.
enum ExitCode : int { kExitPass = 0, kExitThreshold = 1, kExitConfig = 2, kExitNumerical = 3 };

}  // namespace slowfast
