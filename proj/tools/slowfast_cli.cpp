// slowfast: command-line front end for the averaging experiments.
//
//   slowfast converge  [--config F] [--seed S] [--out DIR] [--replicas N]
//   slowfast diagnose  ...
//   slowfast check     ...
//   slowfast fbar      ...
//   slowfast simulate  ... [--noise-in noise.bin]
//
// Exit status: 0 pass, 1 threshold failure, 2 configuration error,
// 3 numerical failure.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "slowfast/errors.hpp"
#include "slowfast/experiment.hpp"

namespace fs = std::filesystem;
using namespace slowfast;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> replicas;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Config file (key = value lines)");
  cmd->add_option("--seed", opts.seed, "Master seed override");
  cmd->add_option("--out", opts.out, "Output directory override");
  cmd->add_option("--replicas", opts.replicas, "Replica count override")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve_config(const CommonOptions& opts) {
  ExperimentConfig config = opts.config_path.empty() ? ExperimentConfig{} : load_config(opts.config_path);
  if (opts.seed) config.master_seed = *opts.seed;
  if (opts.out) config.output_dir = *opts.out;
  if (opts.replicas) config.replicas = *opts.replicas;
  config.validate();
  return config;
}

std::ofstream open_output(const ExperimentConfig& config, const std::string& name) {
  fs::create_directories(config.output_dir);
  const fs::path path = config.output_dir / name;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

int cmd_converge(const ExperimentConfig& config) {
  const ConvergenceResult result = run_convergence(config);
  auto csv = open_output(config, "convergence.csv");
  write_convergence_csv(csv, result.rows);
  auto report = open_output(config, "convergence_report.txt");
  write_convergence_report(report, config, result);
  write_convergence_report(std::cout, config, result);
  if (result.numerical_failure) return kExitNumerical;
  return result.passed ? kExitPass : kExitThreshold;
}

int cmd_diagnose(const ExperimentConfig& config) {
  const DiagnosticsResult result = run_diagnostics(config);
  auto moment = open_output(config, "diag_moment.csv");
  write_suite_csv(moment, result.moment);
  auto increment = open_output(config, "diag_increment.csv");
  write_suite_csv(increment, result.increment);
  auto deviation = open_output(config, "diag_deviation.csv");
  write_suite_csv(deviation, result.deviation);
  auto ergodicity = open_output(config, "diag_ergodicity.csv");
  write_suite_csv(ergodicity, result.ergodicity);
  auto khas = open_output(config, "khasminskii.csv");
  write_khasminskii_csv(khas, result.khasminskii);
  auto report = open_output(config, "diagnostics_report.txt");
  write_diagnostics_report(report, result);
  write_diagnostics_report(std::cout, result);
  return result.passed ? kExitPass : kExitThreshold;
}

int cmd_check(const ExperimentConfig& config) {
  const ConditionsResult result = run_check_conditions(config);
  auto csv = open_output(config, "conditions.csv");
  write_conditions_csv(csv, result.reports);
  auto report = open_output(config, "conditions_report.txt");
  write_conditions_report(report, result);
  write_conditions_report(std::cout, result);
  return result.passed ? kExitPass : kExitThreshold;
}

int cmd_fbar(const ExperimentConfig& config) {
  const FbarComparison cmp = run_fbar(config);
  auto csv = open_output(config, "fbar.csv");
  write_fbar_csv(csv, cmp.estimate);
  std::printf("Fbar at x0: window %.6g, %zu replicas\n", cmp.estimate.t_avg_used, cmp.estimate.replicas_used);
  for (const auto& w : cmp.estimate.warnings) std::printf("warning: %s\n", w.c_str());
  std::printf("%6s %22s %14s %22s\n", "node", "estimate", "std_error", "oracle");
  for (std::size_t i = 0; i < cmp.estimate.value.size(); ++i) {
    if (cmp.oracle) {
      std::printf("%6zu %22.15g %14.6g %22.15g\n", i, cmp.estimate.value[i], cmp.estimate.std_error[i], (*cmp.oracle)[i]);
    } else {
      std::printf("%6zu %22.15g %14.6g %22s\n", i, cmp.estimate.value[i], cmp.estimate.std_error[i], "-");
    }
  }
  if (!cmp.oracle) {
    std::printf("no closed form for this fast model\n");
    return kExitPass;
  }
  const bool ok = cmp.max_z <= 3.0;
  std::printf("max |estimate - oracle| / std_error = %.4g (threshold 3): %s\n", cmp.max_z, ok ? "PASS" : "FAIL");
  return ok ? kExitPass : kExitThreshold;
}

int cmd_simulate(const ExperimentConfig& config, const std::string& noise_in) {
  std::optional<NoisePath> replay;
  if (!noise_in.empty()) {
    try {
      replay = NoisePath::load(noise_in);
    } catch (const std::runtime_error& e) {
      throw ConfigError(e.what());
    }
  }
  const CoupledRun run = run_simulate(config, replay ? &*replay : nullptr);
  auto csv = open_output(config, "trajectory.csv");
  write_trajectory_csv(csv, run);
  fs::create_directories(config.output_dir);
  run.noise.save(config.output_dir / "noise.bin");
  std::printf("wrote %zu steps to %s\n", run.x.times.size() - 1, (config.output_dir / "trajectory.csv").c_str());
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slow-fast stochastic averaging experiments"};
  app.require_subcommand(1);

  CommonOptions converge_opts, diagnose_opts, check_opts, fbar_opts, simulate_opts;
  std::string noise_in;
  auto* converge = app.add_subcommand("converge", "Strong averaging error over the eps grid");
  add_common(converge, converge_opts);
  auto* diagnose = app.add_subcommand("diagnose", "Moment, increment, deviation and contraction suites");
  add_common(diagnose, diagnose_opts);
  auto* check = app.add_subcommand("check", "Randomized checks of the structural conditions");
  add_common(check, check_opts);
  auto* fbar = app.add_subcommand("fbar", "Estimate Fbar at x0 and compare with the closed form");
  add_common(fbar, fbar_opts);
  auto* simulate = app.add_subcommand("simulate", "Dump one coupled trajectory and its noise path");
  add_common(simulate, simulate_opts);
  simulate->add_option("--noise-in", noise_in, "Replay a recorded noise path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (*converge) return cmd_converge(resolve_config(converge_opts));
    if (*diagnose) return cmd_diagnose(resolve_config(diagnose_opts));
    if (*check) return cmd_check(resolve_config(check_opts));
    if (*fbar) return cmd_fbar(resolve_config(fbar_opts));
    if (*simulate) return cmd_simulate(resolve_config(simulate_opts), noise_in);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericalFailure& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitConfig;
}
