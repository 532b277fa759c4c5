#include "slowfast/averaging.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "slowfast/errors.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/stats.hpp"

namespace slowfast {

namespace {

std::size_t whole_steps(double T, double dt) {
  return static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
}

}  // namespace

void FrozenRunSpec::validate() const {
  if (!(t_burn > 0.0) || !(t_avg > 0.0) || !(dt_fast > 0.0)) {
    throw ConfigError("frozen run: t_burn, t_avg and dt_fast must be positive");
  }
  if (n_replicas < 2) throw ConfigError("frozen run: at least 2 replicas are needed for error bars");
  require_same_grid(x_frozen, y0);
}

FrozenRunSpec default_frozen_spec(const ModelSpec& model, const Field& x, const Field& y0) {
  const double margin = model.margin();
  if (!(margin > 0.0)) throw ConfigError("frozen run needs a positive dissipativity margin");
  return FrozenRunSpec{x, y0, 8.0 / margin, 50.0 / margin, 8, 0.1 / margin};
}

Trajectory simulate_frozen(const Field& x_frozen, const Field& y0, const ModelSpec& model, double T, double dt_fast,
                           RngStream& stream) {
  if (!(model.margin() > 0.0)) throw ConfigError("frozen run needs a positive dissipativity margin");
  if (!(T > 0.0) || !(dt_fast > 0.0)) throw ConfigError("frozen run: T and dt_fast must be positive");
  const std::size_t steps = whole_steps(T, dt_fast);
  FastMicroStepper micro(model, dt_fast, 1.0);
  DrawnIncrements noise(stream);
  std::vector<double> dw(micro.noise_modes());
  Trajectory out;
  out.times.reserve(steps + 1);
  out.states.reserve(steps + 1);
  Field y = y0;
  out.times.push_back(0.0);
  out.states.push_back(y);
  for (std::size_t m = 0; m < steps; ++m) {
    noise.next(dt_fast, dw);
    micro.step(x_frozen, y, dw);
    out.times.push_back(static_cast<double>(m + 1) * dt_fast);
    out.states.push_back(y);
  }
  return out;
}

Trajectory simulate_frozen(const FrozenRunSpec& spec, const ModelSpec& model, RngStream& stream) {
  spec.validate();
  return simulate_frozen(spec.x_frozen, spec.y0, model, spec.t_burn + spec.t_avg, spec.dt_fast, stream);
}

FbarEstimate estimate_fbar(const ModelSpec& model, const FrozenRunSpec& spec, std::uint64_t master_seed,
                           std::uint64_t stream_base) {
  spec.validate();
  const double margin = model.margin();
  if (!(margin > 0.0)) throw ConfigError("Fbar estimate needs a positive dissipativity margin");

  const std::size_t n_burn = whole_steps(spec.t_burn, spec.dt_fast);
  const std::size_t n_avg = std::max<std::size_t>(1, whole_steps(spec.t_avg, spec.dt_fast));
  const Grid1D& grid = spec.x_frozen.grid();

  std::vector<Field> per_replica(spec.n_replicas, Field(grid));
  parallel_for(spec.n_replicas, [&](std::size_t r) {
    RngStream stream(master_seed, derive_stream_id(stream_base, r));
    FastMicroStepper micro(model, spec.dt_fast, 1.0);
    DrawnIncrements noise(stream);
    std::vector<double> dw(micro.noise_modes());
    Field y = spec.y0;
    Field sum(grid);
    for (std::size_t m = 0; m < n_burn + n_avg; ++m) {
      if (m >= n_burn) sum += y;
      noise.next(spec.dt_fast, dw);
      micro.step(spec.x_frozen, y, dw);
    }
    if (!y.all_finite()) throw NumericalFailure("frozen run produced non-finite values");
    sum *= 1.0 / static_cast<double>(n_avg);
    per_replica[r] = coupling_F(model.coupling, spec.x_frozen, sum);
  });

  FbarEstimate est{Field(grid), Field(grid), static_cast<double>(n_avg) * spec.dt_fast, spec.n_replicas, {}};
  std::vector<double> column(spec.n_replicas);
  for (std::size_t i = 0; i < grid.n_interior(); ++i) {
    for (std::size_t r = 0; r < spec.n_replicas; ++r) column[r] = per_replica[r][i];
    const MeanStderr ms = mean_stderr(column);
    est.value[i] = ms.mean;
    est.std_error[i] = ms.std_error;
  }
  if (spec.t_burn < 5.0 / margin) {
    est.warnings.push_back("burn-in " + std::to_string(spec.t_burn) + " is shorter than 5/margin = " +
                           std::to_string(5.0 / margin));
  }
  return est;
}

DecayFit ergodicity_decay(const Field& x, const Field& y1, const Field& y2, const ModelSpec& model, double T,
                          double dt_fast, RngStream& stream) {
  if (!(model.margin() > 0.0)) throw ConfigError("decay fit needs a positive dissipativity margin");
  if (!(T > 0.0) || !(dt_fast > 0.0)) throw ConfigError("decay fit: T and dt_fast must be positive");
  constexpr double kFloor = 1e-14;
  constexpr std::size_t kMinSamples = 10;

  const std::size_t steps = whole_steps(T, dt_fast);
  FastMicroStepper a(model, dt_fast, 1.0);
  FastMicroStepper b(model, dt_fast, 1.0);
  DrawnIncrements noise(stream);
  std::vector<double> dw(a.noise_modes());
  Field u = y1;
  Field v = y2;
  std::vector<double> ts;
  std::vector<double> logs;
  for (std::size_t m = 0;; ++m) {
    const double d = norm(u - v, NormKind::l2());
    if (!(d >= kFloor)) break;
    ts.push_back(static_cast<double>(m) * dt_fast);
    logs.push_back(std::log(d));
    if (m == steps) break;
    noise.next(dt_fast, dw);
    a.step(x, u, dw);
    b.step(x, v, dw);
  }

  DecayFit fit;
  fit.samples = ts.size();
  if (ts.size() < kMinSamples) {
    fit.degenerate = true;
    fit.reason = "trajectories coincide within 1e-14 after " + std::to_string(ts.size()) + " samples";
    return fit;
  }
  const LinearFit lf = fit_linear(ts, logs);
  fit.slope = lf.slope;
  fit.r_squared = lf.r_squared;
  return fit;
}

bool is_ou_model(const ModelSpec& model) {
  return model.fast.b2_kind() == FastOperatorSpec::B2Kind::LinearInX && model.coupling.g2.additive();
}

Field oracle_fbar_ou(const Field& x, const ModelSpec& model) {
  if (!is_ou_model(model)) {
    throw ConfigError("closed-form Fbar needs a linear-in-x fast drift with additive noise");
  }
  const CouplingSpec& c = model.coupling;
  require_same_grid(c.f0, x);
  const Field m = poisson_solve(x);
  const double cb = model.fast.c_b();
  Field out(x.grid());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = c.f0[i] + c.c_fx * x[i] + c.c_fy * (cb * m[i]);
  return out;
}

OuAveragedCoefficient::OuAveragedCoefficient(const ModelSpec& model) : model_(&model) {
  if (!is_ou_model(model)) {
    throw ConfigError("closed-form Fbar needs a linear-in-x fast drift with additive noise");
  }
}

EstimatedAveragedCoefficient::EstimatedAveragedCoefficient(const ModelSpec& model, std::size_t n_replicas,
                                                           std::uint64_t master_seed, std::uint64_t stream_base)
    : model_(&model), n_replicas_(n_replicas), master_seed_(master_seed), stream_base_(stream_base) {}

Field EstimatedAveragedCoefficient::operator()(const Field& x) {
  if (const auto it = exact_.find(field_hash(x)); it != exact_.end() && entries_[it->second].x == x) {
    ++hits_;
    return entries_[it->second].value;
  }
  const double radius = 0.05 * norm(x, NormKind::l2()) + 1e-3;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (norm(x - it->x, NormKind::l2()) <= radius) {
      ++hits_;
      return it->value;
    }
  }
  FrozenRunSpec spec = default_frozen_spec(*model_, x, Field(x.grid()));
  spec.n_replicas = n_replicas_;
  const FbarEstimate est =
      estimate_fbar(*model_, spec, master_seed_, derive_stream_id(stream_base_, entries_.size()));
  exact_[field_hash(x)] = entries_.size();
  entries_.push_back({x, est.value});
  return est.value;
}

std::uint64_t field_hash(const Field& f) {
  std::uint64_t h = mix64(f.size());
  for (double v : f.values()) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
  return h;
}

void write_fbar_csv(std::ostream& out, const FbarEstimate& estimate) {
  out << "node,value,std_error\n";
  char line[96];
  for (std::size_t i = 0; i < estimate.value.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.17g,%.17g\n", i, estimate.value[i], estimate.std_error[i]);
    out << line;
  }
}

}  // namespace slowfast
