#include "slowfast/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "slowfast/errors.hpp"
#include "slowfast/parallel.hpp"

namespace slowfast {

namespace {

// Stream-id roots; every replica stream is derive_stream_id(root, index).
constexpr std::uint64_t kConvergenceSlow = 0x51;
constexpr std::uint64_t kConvergenceFast = 0xfa57;
constexpr std::uint64_t kConvergenceFbar = 0xfba5;
constexpr std::uint64_t kDiagnosticSlow = 0xd51;
constexpr std::uint64_t kDiagnosticFast = 0xdfa57;
constexpr std::uint64_t kDecay = 0xdeca7;
constexpr std::uint64_t kConditions = 0xc4ec;
constexpr std::uint64_t kFbarCommand = 0xfbfb;
constexpr std::uint64_t kSimulate = 0x5157;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double parse_number(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec == std::errc() && ptr != end && *ptr == '/') {
    double d = 0.0;
    auto [ptr2, ec2] = std::from_chars(ptr + 1, end, d);
    if (ec2 == std::errc() && ptr2 == end && d != 0.0) return v / d;
  }
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError("config key '" + key + "': '" + text + "' is not a number");
  }
  return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': '" + text + "' is not a nonnegative integer");
  }
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(key, trim(item)));
  if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)>;

Setter real(double ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*field = parse_number(k, v); };
}

Setter count(std::size_t ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
    c.*field = static_cast<std::size_t>(parse_unsigned(k, v));
  };
}

Setter text(std::string ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string&, const std::string& v) { c.*field = v; };
}

Setter list(std::vector<double> ExperimentConfig::*field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*field = parse_list(k, v); };
}

Setter noise_real(NoiseSpec ExperimentConfig::*noise, double NoiseSpec::*field) {
  return [noise, field](ExperimentConfig& c, const std::string& k, const std::string& v) {
    (c.*noise).*field = parse_number(k, v);
  };
}

Setter noise_modes(NoiseSpec ExperimentConfig::*noise) {
  return [noise](ExperimentConfig& c, const std::string& k, const std::string& v) {
    (c.*noise).modes = static_cast<std::size_t>(parse_unsigned(k, v));
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"slow", text(&ExperimentConfig::slow)},
      {"slow.p", real(&ExperimentConfig::slow_p)},
      {"slow.c", real(&ExperimentConfig::slow_c)},
      {"slow.viscosity", real(&ExperimentConfig::slow_viscosity)},
      {"fast", text(&ExperimentConfig::fast)},
      {"fast.c_b", real(&ExperimentConfig::fast_c_b)},
      {"fast.b", real(&ExperimentConfig::fast_b)},
      {"coupling.f0_amplitude", real(&ExperimentConfig::f0_amplitude)},
      {"coupling.c_fx", real(&ExperimentConfig::c_fx)},
      {"coupling.c_fy", real(&ExperimentConfig::c_fy)},
      {"noise.g1_amplitude", noise_real(&ExperimentConfig::g1, &NoiseSpec::amplitude)},
      {"noise.g1_modes", noise_modes(&ExperimentConfig::g1)},
      {"noise.g1_mult", noise_real(&ExperimentConfig::g1, &NoiseSpec::multiplicative)},
      {"noise.g2_amplitude", noise_real(&ExperimentConfig::g2, &NoiseSpec::amplitude)},
      {"noise.g2_modes", noise_modes(&ExperimentConfig::g2)},
      {"noise.g2_mult", noise_real(&ExperimentConfig::g2, &NoiseSpec::multiplicative)},
      {"grid.n_interior", count(&ExperimentConfig::n_interior)},
      {"init.x0_amplitude", real(&ExperimentConfig::x0_amplitude)},
      {"init.y0_amplitude", real(&ExperimentConfig::y0_amplitude)},
      {"epsilon_grid", list(&ExperimentConfig::epsilon_grid)},
      {"delta_rule", text(&ExperimentConfig::delta_rule)},
      {"delta_c", real(&ExperimentConfig::delta_c)},
      {"delta_a", real(&ExperimentConfig::delta_a)},
      {"delta_fixed", real(&ExperimentConfig::delta_fixed)},
      {"replicas", count(&ExperimentConfig::replicas)},
      {"T", real(&ExperimentConfig::T)},
      {"dt_macro",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.scheme.dt_macro = parse_number(k, v);
       }},
      {"dt_fast_target",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.scheme.dt_fast_target = parse_number(k, v);
       }},
      {"newton_tol",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         c.scheme.newton_tol = parse_number(k, v);
       }},
      {"newton_max_iter",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) {
         const auto n = parse_unsigned(k, v);
         if (n > 100000) throw ConfigError("config key 'newton_max_iter' is too large");
         c.scheme.newton_max_iter = static_cast<int>(n);
       }},
      {"master_seed",
       [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.master_seed = parse_unsigned(k, v); }},
      {"output_dir", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }},
      {"fbar.mode", text(&ExperimentConfig::fbar_mode)},
      {"fbar.replicas", count(&ExperimentConfig::fbar_replicas)},
      {"fbar.t_burn", real(&ExperimentConfig::fbar_t_burn)},
      {"fbar.t_avg", real(&ExperimentConfig::fbar_t_avg)},
      {"diagnose.deltas", list(&ExperimentConfig::diagnose_deltas)},
      {"diagnose.epsilon_grid", list(&ExperimentConfig::diagnose_epsilon_grid)},
      {"diagnose.fixed_delta", real(&ExperimentConfig::diagnose_fixed_delta)},
      {"diagnose.b_scan", list(&ExperimentConfig::diagnose_b_scan)},
      {"diagnose.decay_replicas", count(&ExperimentConfig::diagnose_decay_replicas)},
      {"simulate.epsilon", real(&ExperimentConfig::simulate_epsilon)},
      {"check.samples", count(&ExperimentConfig::check_samples)},
  };
  return table;
}

void require_epsilon_grid(const std::vector<double>& grid, const std::string& key) {
  if (grid.empty()) throw ConfigError(key + " is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] <= 1.0)) throw ConfigError(key + " entries must lie in (0, 1]");
    if (i > 0 && !(grid[i] < grid[i - 1])) throw ConfigError(key + " must be strictly decreasing");
  }
}

Field sine_profile(const Grid1D& grid, double amplitude) {
  Field f(grid);
  for (std::size_t i = 0; i < grid.n_interior(); ++i) f[i] = amplitude * std::sin(std::numbers::pi * grid.node(i));
  return f;
}

std::string fmt(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::unique_ptr<AveragedCoefficient> make_fbar(const ExperimentConfig& config, const ModelSpec& model,
                                               std::uint64_t stream_base) {
  const bool oracle = config.fbar_mode == "oracle" || (config.fbar_mode == "auto" && is_ou_model(model));
  if (oracle) return std::make_unique<OuAveragedCoefficient>(model);
  return std::make_unique<EstimatedAveragedCoefficient>(model, config.fbar_replicas, config.master_seed,
                                                        stream_base);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SuiteRow suite_row(const std::string& suite, double param, std::span<const double> values) {
  const MeanStderr ms = mean_stderr(values);
  return SuiteRow{suite, param, ms.mean, ms.std_error, values.size()};
}

std::optional<LinearFit> try_fit(const std::vector<SuiteRow>& rows, std::string& note) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows) pts.emplace_back(r.param, r.value_mean);
  try {
    return fit_loglog(pts);
  } catch (const std::invalid_argument& e) {
    note = e.what();
    return std::nullopt;
  }
}

double max_over_min(const std::vector<SuiteRow>& rows) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& r : rows) {
    lo = std::min(lo, r.value_mean);
    hi = std::max(hi, r.value_mean);
  }
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

void ExperimentConfig::validate() const {
  if (slow != "burgers" && slow != "porous_medium" && slow != "p_laplace") {
    throw ConfigError("slow must be burgers, porous_medium or p_laplace, got '" + slow + "'");
  }
  if (fast != "linear" && fast != "smooth") throw ConfigError("fast must be linear or smooth, got '" + fast + "'");
  if (delta_rule != "power" && delta_rule != "fixed") {
    throw ConfigError("delta_rule must be power or fixed, got '" + delta_rule + "'");
  }
  if (fbar_mode != "auto" && fbar_mode != "oracle" && fbar_mode != "estimate") {
    throw ConfigError("fbar.mode must be auto, oracle or estimate, got '" + fbar_mode + "'");
  }
  require_epsilon_grid(epsilon_grid, "epsilon_grid");
  if (!diagnose_epsilon_grid.empty()) require_epsilon_grid(diagnose_epsilon_grid, "diagnose.epsilon_grid");
  if (!(delta_c > 0.0) || !(delta_fixed > 0.0)) throw ConfigError("delta_c and delta_fixed must be positive");
  if (replicas < 1 || fbar_replicas < 2 || diagnose_decay_replicas < 1 || check_samples < 1) {
    throw ConfigError("replicas, diagnose.decay_replicas and check.samples must be >= 1, fbar.replicas >= 2");
  }
  scheme.validate();
  macro_step_count(T, scheme.dt_macro);
  for (double d : diagnose_deltas) BlockSchedule::make(d, T, scheme.dt_macro);
  BlockSchedule::make(diagnose_fixed_delta, T, scheme.dt_macro);
  if (diagnose_deltas.size() < 3) throw ConfigError("diagnose.deltas needs at least 3 entries");
  for (double b : diagnose_b_scan) {
    if (!(b >= 0.0)) throw ConfigError("diagnose.b_scan entries must be nonnegative");
  }
  const Grid1D grid = config_grid(*this);
  config_slow(*this);
  config_fast(*this);
  const CouplingSpec coupling = config_coupling(*this, grid);
  NoiseBasis(grid, coupling.g1);
  NoiseBasis(grid, coupling.g2);
  if (slow == "porous_medium" && !coupling.g1.additive()) {
    throw ConfigError("porous medium model requires additive slow noise");
  }
}

double ExperimentConfig::delta_for(double epsilon) const {
  return delta_rule == "fixed" ? delta_fixed : delta_c * std::pow(epsilon, delta_a);
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("config key '" + key + "' given twice");
    if (value.empty()) throw ConfigError("config key '" + key + "' has no value");
    it->second(config, key, value);
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

Grid1D config_grid(const ExperimentConfig& config) { return Grid1D(config.n_interior); }

SlowOperatorSpec config_slow(const ExperimentConfig& config) {
  if (config.slow == "porous_medium") return SlowOperatorSpec::porous_medium(config.slow_p, config.slow_c);
  if (config.slow == "p_laplace") return SlowOperatorSpec::p_laplace(config.slow_p);
  if (config.slow == "burgers") return SlowOperatorSpec::burgers(config.slow_viscosity);
  throw ConfigError("unknown slow model '" + config.slow + "'");
}

FastOperatorSpec config_fast(const ExperimentConfig& config) {
  if (config.fast == "linear") return FastOperatorSpec::linear_in_x(config.fast_c_b);
  if (config.fast == "smooth") return FastOperatorSpec::smooth_bounded(config.fast_c_b, config.fast_b);
  throw ConfigError("unknown fast model '" + config.fast + "'");
}

CouplingSpec config_coupling(const ExperimentConfig& config, const Grid1D& grid) {
  CouplingSpec c(grid);
  c.f0 = sine_profile(grid, config.f0_amplitude);
  c.c_fx = config.c_fx;
  c.c_fy = config.c_fy;
  c.g1 = config.g1;
  c.g2 = config.g2;
  return c;
}

ModelSpec build_model(const ExperimentConfig& config, double epsilon) {
  const Grid1D grid = config_grid(config);
  return ModelSpec{config_slow(config),
                   config_fast(config),
                   config_coupling(config, grid),
                   epsilon,
                   grid,
                   sine_profile(grid, config.x0_amplitude),
                   sine_profile(grid, config.y0_amplitude)};
}

ConvergenceResult run_convergence(const ExperimentConfig& config) {
  config.validate();
  std::vector<ModelSpec> models;
  for (double eps : config.epsilon_grid) {
    models.push_back(build_model(config, eps));
    models.back().validate();
  }

  ConvergenceResult result;
  for (std::size_t e = 0; e < models.size(); ++e) {
    const ModelSpec& model = models[e];
    const auto t0 = std::chrono::steady_clock::now();
    ConvergenceRow row;
    row.epsilon = model.epsilon;
    row.delta = config.delta_for(model.epsilon);
    row.replicas = config.replicas;
    std::vector<double> errors(config.replicas);
    try {
      parallel_for(config.replicas, [&](std::size_t r) {
        RngStream slow_stream(config.master_seed, derive_stream_id(kConvergenceSlow, r));
        RngStream fast_stream(config.master_seed, derive_stream_id(kConvergenceFast, r));
        const CoupledRun run = simulate_coupled(model, config.T, config.scheme, slow_stream, fast_stream);
        auto fbar = make_fbar(config, model, derive_stream_id(derive_stream_id(kConvergenceFbar, e), r));
        const Trajectory averaged = simulate_averaged(model, *fbar, config.T, config.scheme, run.noise);
        errors[r] = strong_error(run.x, averaged, model.slow.state_norm());
      });
      const MeanStderr ms = mean_stderr(errors);
      row.error_mean = ms.mean;
      row.error_stderr = ms.std_error;
    } catch (const NumericalFailure& failure) {
      row.valid = false;
      row.note = failure.what();
      row.error_mean = std::numeric_limits<double>::quiet_NaN();
      row.error_stderr = std::numeric_limits<double>::quiet_NaN();
      result.numerical_failure = true;
    }
    row.wall_time_s = seconds_since(t0);
    result.rows.push_back(row);
  }

  const auto& rows = result.rows;
  result.degenerate = !result.numerical_failure &&
                      std::all_of(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return r.error_mean <= 1e-12; });
  result.strictly_decreasing = !result.numerical_failure;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].error_mean < rows[i - 1].error_mean)) result.strictly_decreasing = false;
  }
  if (result.numerical_failure) {
    result.fit_note = "numerical failure";
  } else if (result.degenerate) {
    result.fit_note = "degenerate";
  } else {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) pts.emplace_back(r.epsilon, r.error_mean);
    try {
      result.fit = fit_loglog(pts);
    } catch (const std::invalid_argument& e) {
      result.fit_note = e.what();
    }
  }
  result.passed = !result.numerical_failure &&
                  (result.degenerate || (result.strictly_decreasing && result.fit && result.fit->slope > 0.15 &&
                                         result.fit->r_squared >= 0.9));
  return result;
}

DiagnosticsResult run_diagnostics(const ExperimentConfig& config) {
  config.validate();
  const std::vector<double>& epsilons = config.diagnostics_epsilons();
  std::vector<double> deltas = config.diagnose_deltas;
  std::sort(deltas.begin(), deltas.end(), std::greater<>());
  std::vector<double> dev_deltas = deltas;
  if (std::find(deltas.begin(), deltas.end(), config.diagnose_fixed_delta) == deltas.end()) {
    dev_deltas.push_back(config.diagnose_fixed_delta);
  }
  std::vector<BlockSchedule> schedules;
  for (double d : dev_deltas) schedules.push_back(BlockSchedule::make(d, config.T, config.scheme.dt_macro));

  const std::size_t R = config.replicas;
  DiagnosticsResult result;
  std::vector<SuiteRow> fixed_delta_rows;
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    const ModelSpec model = build_model(config, epsilons[e]);
    model.validate();
    std::vector<double> sup(R);
    std::vector<std::vector<double>> inc(deltas.size(), std::vector<double>(R));
    std::vector<std::vector<double>> dev(dev_deltas.size(), std::vector<double>(R));
    parallel_for(R, [&](std::size_t r) {
      RngStream slow_stream(config.master_seed, derive_stream_id(kDiagnosticSlow, r));
      RngStream fast_stream(config.master_seed, derive_stream_id(kDiagnosticFast, r));
      RunOptions options;
      options.stat_deltas = deltas;
      const CoupledRun run = simulate_coupled(model, config.T, config.scheme, slow_stream, fast_stream, options);
      sup[r] = run.stats.sup_norm_x_sq;
      for (std::size_t d = 0; d < deltas.size(); ++d) inc[d][r] = run.stats.increment_integral.at(deltas[d]);
      for (std::size_t d = 0; d < dev_deltas.size(); ++d) {
        dev[d][r] = deviation_statistic(run.y, build_auxiliary(run, model, schedules[d], config.scheme));
      }
    });
    result.moment.push_back(suite_row("moment", epsilons[e], sup));
    for (std::size_t d = 0; d < dev_deltas.size(); ++d) {
      const MeanStderr ms = mean_stderr(dev[d]);
      result.khasminskii.push_back({dev_deltas[d], epsilons[e], ms.mean, ms.std_error, R});
      if (dev_deltas[d] == config.diagnose_fixed_delta) {
        fixed_delta_rows.push_back(suite_row("deviation_eps", epsilons[e], dev[d]));
      }
    }
    if (e + 1 == epsilons.size()) {
      for (std::size_t d = 0; d < deltas.size(); ++d) {
        result.increment.push_back(suite_row("increment", deltas[d], inc[d]));
        result.deviation.push_back(suite_row("deviation", deltas[d], dev[d]));
      }
    }
  }
  result.deviation.insert(result.deviation.end(), fixed_delta_rows.begin(), fixed_delta_rows.end());

  // Contraction of the frozen equation for the smooth fast drift over b.
  bool decay_ok = true;
  std::string decay_detail;
  for (double b : config.diagnose_b_scan) {
    ModelSpec model = build_model(config, epsilons.back());
    model.fast = FastOperatorSpec::smooth_bounded(config.fast_c_b, b);
    const double margin = model.margin();
    if (!(margin > 0.0)) {
      decay_detail += " b=" + fmt(b, 4) + ": skipped (margin " + fmt(margin, 4) + ")";
      continue;
    }
    const std::size_t n = config.diagnose_decay_replicas;
    std::vector<double> slopes(n);
    std::vector<double> r2(n);
    parallel_for(n, [&](std::size_t r) {
      RngStream stream(config.master_seed, derive_stream_id(derive_stream_id(kDecay, static_cast<std::uint64_t>(b * 1e6)), r));
      const Field y1 = random_smooth_field(model.grid, 1.0, stream);
      const Field y2 = random_smooth_field(model.grid, 1.0, stream);
      const DecayFit fit = ergodicity_decay(model.x0, y1, y2, model, 50.0 / margin, 0.1 / margin, stream);
      slopes[r] = fit.degenerate ? 0.0 : fit.slope;
      r2[r] = fit.degenerate ? 0.0 : fit.r_squared;
    });
    result.ergodicity.push_back(suite_row("ergodicity", b, slopes));
    const double worst_slope = *std::max_element(slopes.begin(), slopes.end());
    const double worst_r2 = *std::min_element(r2.begin(), r2.end());
    const bool ok = worst_slope <= -0.9 * margin / 2.0 && worst_r2 >= 0.98;
    decay_ok = decay_ok && ok;
    decay_detail += " b=" + fmt(b, 4) + ": max slope " + fmt(worst_slope, 5) + " vs " + fmt(-0.45 * margin, 5) +
                    ", min r2 " + fmt(worst_r2, 5) + (ok ? "" : " FAIL") + ";";
  }

  auto& v = result.verdicts;
  {
    const double ratio = max_over_min(result.moment);
    v.push_back({"moment_uniformity", result.moment.size() >= 2 && ratio < 3.0,
                 "max/min of E sup ||X||^2 over eps = " + fmt(ratio, 5) + " (threshold < 3)"});
  }
  for (const auto* rows : {&result.increment, &result.deviation}) {
    std::vector<SuiteRow> by_delta;
    for (const auto& r : *rows) {
      if (r.suite == "increment" || r.suite == "deviation") by_delta.push_back(r);
    }
    std::string note;
    const auto fit = try_fit(by_delta, note);
    const std::string name = by_delta.empty() ? "scaling" : by_delta.front().suite + "_scaling";
    v.push_back({name, fit && fit->slope >= 0.5,
                 fit ? "log-log slope in delta = " + fmt(fit->slope, 5) + ", r2 = " + fmt(fit->r_squared, 5) +
                           " (threshold >= 0.5)"
                     : "fit failed: " + note});
  }
  {
    const double ratio = max_over_min(fixed_delta_rows);
    v.push_back({"deviation_uniformity", fixed_delta_rows.size() >= 2 && ratio < 3.0,
                 "max/min of deviation over eps at delta = " + fmt(config.diagnose_fixed_delta, 6) + " is " +
                     fmt(ratio, 5) + " (threshold < 3)"});
  }
  v.push_back({"ergodicity_decay", decay_ok && !result.ergodicity.empty(), trim(decay_detail)});
  result.passed = std::all_of(v.begin(), v.end(), [](const SuiteVerdict& s) { return s.passed; });
  return result;
}

ConditionsResult run_check_conditions(const ExperimentConfig& config) {
  config.validate();
  const Grid1D grid = config_grid(config);
  const ConditionContext context{grid, config_slow(config), config_fast(config), config_coupling(config, grid)};
  const ConditionId ids[] = {ConditionId::A2_local_monotone, ConditionId::A3_coercive,   ConditionId::A4_growth,
                             ConditionId::B2_dissipative,    ConditionId::B3_coercive, ConditionId::B4_growth};
  ConditionsResult result;
  result.reports.resize(std::size(ids));
  parallel_for(std::size(ids), [&](std::size_t i) {
    RngStream stream(config.master_seed, derive_stream_id(kConditions, i));
    result.reports[i] = check_condition(ids[i], context, config.check_samples, stream);
  });
  result.passed = std::all_of(result.reports.begin(), result.reports.end(),
                              [](const ConditionReport& r) { return r.violations == 0; });
  return result;
}

FbarComparison run_fbar(const ExperimentConfig& config) {
  config.validate();
  const ModelSpec model = build_model(config, config.epsilon_grid.back());
  model.validate();
  FrozenRunSpec spec = default_frozen_spec(model, model.x0, model.y0);
  if (config.fbar_t_burn > 0.0) spec.t_burn = config.fbar_t_burn;
  if (config.fbar_t_avg > 0.0) spec.t_avg = config.fbar_t_avg;
  spec.n_replicas = config.fbar_replicas;
  FbarComparison out{estimate_fbar(model, spec, config.master_seed, kFbarCommand), std::nullopt, 0.0};
  if (is_ou_model(model)) {
    out.oracle = oracle_fbar_ou(model.x0, model);
    for (std::size_t i = 0; i < model.grid.n_interior(); ++i) {
      const double diff = std::abs(out.estimate.value[i] - (*out.oracle)[i]);
      const double se = out.estimate.std_error[i];
      if (se > 0.0) {
        out.max_z = std::max(out.max_z, diff / se);
      } else if (diff > 0.0) {
        out.max_z = std::numeric_limits<double>::infinity();
      }
    }
  }
  return out;
}

CoupledRun run_simulate(const ExperimentConfig& config, const NoisePath* noise_in) {
  config.validate();
  const double eps = config.simulate_epsilon > 0.0 ? config.simulate_epsilon : config.epsilon_grid.back();
  const ModelSpec model = build_model(config, eps);
  model.validate();
  if (noise_in) return replay_coupled(model, config.T, config.scheme, *noise_in);
  RngStream slow_stream(config.master_seed, derive_stream_id(kSimulate, 0));
  RngStream fast_stream(config.master_seed, derive_stream_id(kSimulate, 1));
  return simulate_coupled(model, config.T, config.scheme, slow_stream, fast_stream);
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceRow>& rows) {
  out << "epsilon,delta,error_mean,error_stderr,replicas,wall_time_s\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%zu,%.6f\n", r.epsilon, r.delta, r.error_mean,
                  r.error_stderr, r.replicas, r.wall_time_s);
    out << line;
  }
}

void write_suite_csv(std::ostream& out, const std::vector<SuiteRow>& rows) {
  out << "suite,param,value_mean,value_stderr,replicas\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g,%zu\n", r.suite.c_str(), r.param, r.value_mean,
                  r.value_stderr, r.replicas);
    out << line;
  }
}

void write_conditions_csv(std::ostream& out, const std::vector<ConditionReport>& reports) {
  out << "condition,samples,violations,worst_margin,constants\n";
  for (const auto& r : reports) {
    std::string constants;
    for (const auto& [name, value] : r.fitted_constants) {
      if (!constants.empty()) constants += ';';
      constants += name + "=" + fmt(value, 10);
    }
    out << to_string(r.condition_id) << ',' << r.samples << ',' << r.violations << ',' << fmt(r.worst_margin) << ','
        << constants << '\n';
  }
}

void write_trajectory_csv(std::ostream& out, const CoupledRun& run) {
  out << "t,node,x,y\n";
  char line[160];
  for (std::size_t n = 0; n < run.x.times.size(); ++n) {
    const Field& x = run.x.states[n];
    const Field& y = run.y.states[n];
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::snprintf(line, sizeof line, "%.17g,%zu,%.17g,%.17g\n", run.x.times[n], i, x[i], y[i]);
      out << line;
    }
  }
}

void write_convergence_report(std::ostream& out, const ExperimentConfig& config, const ConvergenceResult& result) {
  out << "convergence study: slow=" << config.slow << " fast=" << config.fast << " replicas=" << config.replicas
      << " T=" << fmt(config.T, 6) << " dt_macro=" << fmt(config.scheme.dt_macro, 6)
      << " seed=" << config.master_seed << "\n";
  for (const auto& r : result.rows) {
    out << "  eps=" << fmt(r.epsilon, 6) << " delta=" << fmt(r.delta, 6) << " error=" << fmt(r.error_mean, 6)
        << " +- " << fmt(r.error_stderr, 3);
    if (!r.valid) out << "  INVALID: " << r.note;
    out << "\n";
  }
  if (result.fit) {
    out << "fitted order (log error vs log eps): slope=" << fmt(result.fit->slope, 5)
        << " r2=" << fmt(result.fit->r_squared, 5) << "\n";
  } else {
    out << "fit skipped: " << result.fit_note << "\n";
  }
  out << "strictly decreasing: " << (result.strictly_decreasing ? "yes" : "no") << "\n";
  out << "verdict: " << (result.passed ? "PASS" : "FAIL") << "\n";
}

void write_diagnostics_report(std::ostream& out, const DiagnosticsResult& result) {
  for (const auto& v : result.verdicts) {
    out << (v.passed ? "PASS " : "FAIL ") << v.name << ": " << v.detail << "\n";
  }
  out << "verdict: " << (result.passed ? "PASS" : "FAIL") << "\n";
}

void write_conditions_report(std::ostream& out, const ConditionsResult& result) {
  for (const auto& r : result.reports) {
    out << (r.violations == 0 ? "PASS " : "FAIL ") << to_string(r.condition_id) << ": " << r.violations << "/"
        << r.samples << " violations, worst margin " << fmt(r.worst_margin, 5);
    for (const auto& [name, value] : r.fitted_constants) out << ", " << name << "=" << fmt(value, 6);
    out << "\n";
  }
  out << "verdict: " << (result.passed ? "PASS" : "FAIL") << "\n";
}

}  // namespace slowfast
