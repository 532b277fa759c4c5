#include "slowfast/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "slowfast/errors.hpp"

namespace slowfast {

void ModelSpec::validate() const {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw ConfigError("epsilon must lie in (0, 1], got " + std::to_string(epsilon));
  }
  if (!(coupling.f0.grid() == grid) || !(x0.grid() == grid) || !(y0.grid() == grid)) {
    throw ConfigError("model fields are not on the model grid");
  }
  if (std::holds_alternative<PorousMedium>(slow.kind()) && !coupling.g1.additive()) {
    throw ConfigError("porous medium model requires additive slow noise");
  }
  const double m = margin();
  if (!(m > 0.0)) {
    throw ConfigError("dissipativity margin 2*lambda1 - 2*Lip_y(B2) - Lip(G2)^2 = " + std::to_string(m) +
                      " is not positive");
  }
}

double SchemeParams::resolved_fast_target(double margin) const {
  if (dt_fast_target > 0.0) return dt_fast_target;
  if (!(margin > 0.0)) throw ConfigError("default fast step needs a positive dissipativity margin");
  return 0.1 / margin;
}

std::size_t SchemeParams::micro_substeps(double epsilon, double margin) const {
  const double ratio = dt_macro / (epsilon * resolved_fast_target(margin));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(ratio)));
}

void SchemeParams::validate() const {
  if (!(dt_macro > 0.0) || !(newton_tol > 0.0) || newton_max_iter < 1) {
    throw ConfigError("scheme parameters: dt_macro, newton_tol and newton_max_iter must be positive");
  }
}

std::size_t macro_step_count(double T, double dt) {
  if (!(T > 0.0) || !(dt > 0.0)) throw ConfigError("horizon and step must be positive");
  const double ratio = T / dt;
  const auto n = static_cast<std::size_t>(std::llround(ratio));
  if (n == 0 || std::abs(static_cast<double>(n) * dt - T) > 1e-9 * T) {
    throw ConfigError("horizon " + std::to_string(T) + " is not an integer multiple of dt " + std::to_string(dt));
  }
  return n;
}

std::size_t steps_per_block(double delta, double dt) {
  if (!(delta > 0.0)) throw ConfigError("block length must be positive");
  const auto m = static_cast<std::size_t>(std::llround(delta / dt));
  if (m == 0 || std::abs(static_cast<double>(m) * dt - delta) > 1e-9 * delta) {
    throw ConfigError("block length " + std::to_string(delta) + " is not an integer multiple of dt_macro");
  }
  return m;
}

SlowStepper::SlowStepper(const ModelSpec& model, const SchemeParams& params)
    : model_(&model), params_(params), basis_(model.grid, model.coupling.g1), noise_(model.grid.n_interior()) {
  if (const auto* b = std::get_if<Burgers>(&model.slow.kind())) {
    viscous_.emplace(model.grid, params.dt_macro * b->viscosity);
  }
}

Field SlowStepper::step(const Field& x, const Field& forcing, std::span<const double> dw) {
  const double dt = params_.dt_macro;
  basis_.synthesize(dw, noise_);
  basis_.apply_state_factor(x.values(), noise_);
  Field rhs(x.grid());
  for (std::size_t i = 0; i < x.size(); ++i) rhs[i] = x[i] + dt * forcing[i] + noise_[i];

  Field next(x.grid());
  if (viscous_) {
    const Field conv = burgers_convection(x);
    rhs.axpy(dt, conv);
    next = rhs;
    viscous_->solve_in_place(next.values());
    last_residual_ = 0.0;
    last_iterations_ = 0;
  } else {
    next = newton_solve(rhs, x);
  }
  if (!next.all_finite()) throw NumericalFailure("slow step produced non-finite values");
  return next;
}

Field SlowStepper::newton_solve(const Field& rhs, const Field& guess) {
  const ModelSpec& model = *model_;
  const double dt = params_.dt_macro;
  const std::size_t n = rhs.size();
  const double h = model.grid.h();
  const double inv_h2 = 1.0 / (h * h);

  auto residual = [&](const Field& x) {
    Field r = slow_drift(model.slow, x);
    for (std::size_t i = 0; i < n; ++i) r[i] = x[i] - dt * r[i] - rhs[i];
    return r;
  };

  std::vector<double> lower(n), diag(n), upper(n);
  auto assemble_jacobian = [&](const Field& x) {
    if (const auto* pm = std::get_if<PorousMedium>(&model.slow.kind())) {
      std::vector<double> d(n);
      for (std::size_t i = 0; i < n; ++i) d[i] = psi_derivative(*pm, x[i]);
      for (std::size_t i = 0; i < n; ++i) {
        diag[i] = 1.0 + dt * 2.0 * d[i] * inv_h2;
        lower[i] = i == 0 ? 0.0 : -dt * d[i - 1] * inv_h2;
        upper[i] = i + 1 == n ? 0.0 : -dt * d[i + 1] * inv_h2;
      }
    } else {
      const double p = std::get<PLaplace>(model.slow.kind()).p;
      std::vector<double> k(n + 1);
      for (std::size_t f = 0; f <= n; ++f) {
        const double left = f == 0 ? 0.0 : x[f - 1];
        const double right = f == n ? 0.0 : x[f];
        k[f] = (p - 1.0) * std::pow(std::abs((right - left) / h), p - 2.0);
      }
      for (std::size_t i = 0; i < n; ++i) {
        diag[i] = 1.0 + dt * (k[i] + k[i + 1]) * inv_h2;
        lower[i] = -dt * k[i] * inv_h2;
        upper[i] = -dt * k[i + 1] * inv_h2;
      }
    }
  };

  const double target = params_.newton_tol * (1.0 + rhs.max_abs());
  Field x = guess;
  Field r = residual(x);
  double r_norm = r.max_abs();
  int it = 0;
  for (; it < params_.newton_max_iter && r_norm > target; ++it) {
    assemble_jacobian(x);
    std::vector<double> neg_r(n);
    for (std::size_t i = 0; i < n; ++i) neg_r[i] = -r[i];
    const std::vector<double> delta = solve_tridiagonal(lower, diag, upper, neg_r);
    double lambda = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving, lambda *= 0.5) {
      Field trial = x;
      for (std::size_t i = 0; i < n; ++i) trial[i] += lambda * delta[i];
      Field trial_r = residual(trial);
      const double trial_norm = trial_r.max_abs();
      if (std::isfinite(trial_norm) && trial_norm < r_norm) {
        x = std::move(trial);
        r = std::move(trial_r);
        r_norm = trial_norm;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  last_residual_ = r_norm;
  last_iterations_ = it;
  if (!(r_norm <= target)) {
    throw NewtonDivergence("implicit slow step: residual " + std::to_string(r_norm) + " above tolerance " +
                           std::to_string(target) + " after " + std::to_string(it) + " iterations");
  }
  return x;
}

FastMicroStepper::FastMicroStepper(const ModelSpec& model, double tau, double noise_factor)
    : fast_(&model.fast),
      tau_(tau),
      noise_factor_(noise_factor),
      basis_(model.grid, model.coupling.g2),
      solver_(model.grid, tau),
      noise_(model.grid.n_interior()) {}

void FastMicroStepper::step(const Field& x, Field& y, std::span<const double> dw) {
  basis_.synthesize(dw, noise_);
  basis_.apply_state_factor(y.values(), noise_);
  const double cb = fast_->c_b();
  const std::size_t n = y.size();
  if (fast_->b2_kind() == FastOperatorSpec::B2Kind::LinearInX) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + tau_ * (cb * x[i]) + noise_factor_ * noise_[i];
  } else {
    const double b = fast_->b();
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = y[i] + tau_ * (cb * x[i] + b * std::sin(y[i])) + noise_factor_ * noise_[i];
    }
  }
  solver_.solve_in_place(y.values());
}

namespace {

FastMicroStepper make_block_micro(const ModelSpec& model, const SchemeParams& params, std::size_t substeps) {
  const double dt_micro = params.dt_macro / static_cast<double>(substeps);
  return FastMicroStepper(model, dt_micro / model.epsilon, 1.0 / std::sqrt(model.epsilon));
}

}  // namespace

FastBlockStepper::FastBlockStepper(const ModelSpec& model, const SchemeParams& params)
    : substeps_(params.micro_substeps(model.epsilon, model.margin())),
      dt_micro_(params.dt_macro / static_cast<double>(substeps_)),
      micro_(make_block_micro(model, params, substeps_)),
      dw_(model.coupling.g2.modes) {}

void FastBlockStepper::advance(const Field& x, Field& y, Field* y_mean, IncrementSource& noise, NoisePath* record) {
  if (y_mean) std::fill(y_mean->values().begin(), y_mean->values().end(), 0.0);
  for (std::size_t m = 0; m < substeps_; ++m) {
    if (y_mean) *y_mean += y;
    noise.next(dt_micro_, dw_);
    if (record) record->push_fast(dw_);
    micro_.step(x, y, dw_);
  }
  if (y_mean) *y_mean *= 1.0 / static_cast<double>(substeps_);
  if (!y.all_finite()) throw NumericalFailure("fast block produced non-finite values");
}

Field step_slow(const ModelSpec& model, const CoupledState& state, std::span<const double> dw_slow,
                const SchemeParams& params) {
  SlowStepper stepper(model, params);
  return stepper.step(state.x, coupling_F(model.coupling, state.x, state.y), dw_slow);
}

std::pair<Field, std::vector<double>> step_fast_block(const ModelSpec& model, const CoupledState& state,
                                                      const SchemeParams& params, RngStream& stream) {
  FastBlockStepper stepper(model, params);
  NoisePath record(0, model.coupling.g2.modes);
  DrawnIncrements source(stream);
  Field y = state.y;
  stepper.advance(state.x, y, nullptr, source, &record);
  const auto inc = record.fast_increments();
  return {std::move(y), std::vector<double>(inc.begin(), inc.end())};
}

namespace {

struct IncrementAccumulator {
  double delta;
  std::size_t block;
  Field start;
  double total = 0.0;
};

CoupledRun run_coupled(const ModelSpec& model, double T, const SchemeParams& params, IncrementSource& slow_src,
                       IncrementSource& fast_src, const NoisePath* replay, const RunOptions& options) {
  model.validate();
  params.validate();
  const std::size_t steps = macro_step_count(T, params.dt_macro);
  const NormKind h1 = model.slow.state_norm();

  SlowStepper slow(model, params);
  FastBlockStepper fast(model, params);

  CoupledRun run;
  const bool record = options.record && replay == nullptr;
  run.noise = replay ? *replay : NoisePath(slow.noise_modes(), model.coupling.g2.modes);
  if (replay) {
    if (replay->steps() < steps || replay->slow_modes() != slow.noise_modes() ||
        replay->fast_modes() != model.coupling.g2.modes) {
      throw std::invalid_argument("noise path does not cover the requested run");
    }
    for (std::size_t n = 0; n < steps; ++n) {
      if (replay->dt(n) != params.dt_macro || replay->substeps(n) != fast.substeps()) {
        throw std::invalid_argument("noise path schedule mismatch at step " + std::to_string(n));
      }
    }
  }
  NoisePath* recorder = record ? &run.noise : nullptr;

  std::vector<IncrementAccumulator> increments;
  for (double delta : options.stat_deltas) {
    increments.push_back({delta, steps_per_block(delta, params.dt_macro), model.x0});
  }

  Field x = model.x0;
  Field y = model.y0;
  Field y_mean(model.grid);
  std::vector<double> dw(slow.noise_modes());
  run.x.times.reserve(steps + 1);
  run.x.states.reserve(steps + 1);
  run.y.states.reserve(steps + 1);
  run.x.times.push_back(0.0);
  run.x.states.push_back(x);
  run.y.states.push_back(y);

  double sup_x = std::pow(norm(x, h1), 2);
  double y_energy = 0.0;
  for (std::size_t n = 0; n < steps; ++n) {
    if (recorder) recorder->begin_step(params.dt_macro, fast.substeps());
    Field y_next = y;
    fast.advance(x, y_next, &y_mean, fast_src, recorder);
    slow_src.next(params.dt_macro, dw);
    if (recorder) recorder->push_slow(dw);
    Field x_next = slow.step(x, coupling_F(model.coupling, x, y_mean), dw);

    const double t_next = static_cast<double>(n + 1) * params.dt_macro;
    const double dt_n = t_next - run.x.times.back();
    for (auto& acc : increments) {
      if (n % acc.block == 0) acc.start = x;
      acc.total += dt_n * std::pow(norm(x_next - acc.start, h1), 2);
    }
    sup_x = std::max(sup_x, std::pow(norm(x_next, h1), 2));
    y_energy += dt_n * inner(y_next, y_next);

    x = std::move(x_next);
    y = std::move(y_next);
    run.x.times.push_back(t_next);
    run.x.states.push_back(x);
    run.y.states.push_back(y);
  }
  run.y.times = run.x.times;
  run.stats.sup_norm_x_sq = sup_x;
  run.stats.mean_norm_y_sq = y_energy / T;
  for (const auto& acc : increments) run.stats.increment_integral[acc.delta] = acc.total;
  return run;
}

}  // namespace

CoupledRun simulate_coupled(const ModelSpec& model, double T, const SchemeParams& params, RngStream& slow_stream,
                            RngStream& fast_stream, const RunOptions& options) {
  DrawnIncrements slow_src(slow_stream);
  DrawnIncrements fast_src(fast_stream);
  return run_coupled(model, T, params, slow_src, fast_src, nullptr, options);
}

CoupledRun replay_coupled(const ModelSpec& model, double T, const SchemeParams& params, const NoisePath& noise,
                          const RunOptions& options) {
  noise.validate();
  ReplayedIncrements slow_src(noise.slow_increments());
  ReplayedIncrements fast_src(noise.fast_increments());
  return run_coupled(model, T, params, slow_src, fast_src, &noise, options);
}

Trajectory simulate_averaged(const ModelSpec& model, AveragedCoefficient& fbar, double T, const SchemeParams& params,
                             const NoisePath& noise) {
  model.validate();
  params.validate();
  const std::size_t steps = macro_step_count(T, params.dt_macro);
  SlowStepper slow(model, params);
  if (noise.steps() < steps || noise.slow_modes() != slow.noise_modes()) {
    throw std::invalid_argument("noise path does not cover the averaged run");
  }
  Trajectory out;
  out.times.reserve(steps + 1);
  out.states.reserve(steps + 1);
  Field x = model.x0;
  out.times.push_back(0.0);
  out.states.push_back(x);
  for (std::size_t n = 0; n < steps; ++n) {
    if (noise.dt(n) != params.dt_macro) {
      throw std::invalid_argument("noise path schedule mismatch at step " + std::to_string(n));
    }
    x = slow.step(x, fbar(x), noise.slow_step(n));
    out.times.push_back(static_cast<double>(n + 1) * params.dt_macro);
    out.states.push_back(x);
  }
  return out;
}

double strong_error(const Trajectory& a, const Trajectory& b, NormKind kind) {
  if (a.times != b.times || a.states.size() != b.states.size() || a.states.size() != a.times.size()) {
    throw std::invalid_argument("strong_error: trajectories have different time grids");
  }
  double sup = 0.0;
  for (std::size_t n = 0; n < a.states.size(); ++n) {
    sup = std::max(sup, std::pow(norm(a.states[n] - b.states[n], kind), 2));
  }
  return sup;
}

}  // namespace slowfast
