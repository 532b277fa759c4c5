#include "slowfast/khasminskii.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

#include "slowfast/errors.hpp"

namespace slowfast {

BlockSchedule BlockSchedule::make(double delta, double T, double dt_macro) {
  BlockSchedule s;
  s.delta = delta;
  s.T = T;
  s.dt_macro = dt_macro;
  s.macro_steps = macro_step_count(T, dt_macro);
  s.steps_per_block = slowfast::steps_per_block(delta, dt_macro);
  if (s.steps_per_block > s.macro_steps) {
    throw ConfigError("block length " + std::to_string(delta) + " exceeds the horizon " + std::to_string(T));
  }
  const std::size_t blocks = (s.macro_steps + s.steps_per_block - 1) / s.steps_per_block;
  for (std::size_t k = 0; k <= blocks; ++k) s.boundaries.push_back(std::min(static_cast<double>(k) * delta, T));
  return s;
}

Trajectory build_auxiliary(const Trajectory& x, const NoisePath& noise, const ModelSpec& model,
                           const BlockSchedule& schedule, const SchemeParams& params) {
  if (params.dt_macro != schedule.dt_macro) throw std::invalid_argument("auxiliary: dt_macro differs from schedule");
  const std::size_t steps = schedule.macro_steps;
  if (x.states.size() != steps + 1 || x.times.size() != steps + 1) {
    throw std::invalid_argument("auxiliary: slow trajectory does not match the block schedule");
  }
  noise.validate();
  FastBlockStepper fast(model, params);
  if (noise.steps() < steps || noise.fast_modes() != model.coupling.g2.modes) {
    throw std::invalid_argument("auxiliary: noise path does not cover the run");
  }
  for (std::size_t n = 0; n < steps; ++n) {
    if (noise.dt(n) != params.dt_macro || noise.substeps(n) != fast.substeps()) {
      throw std::invalid_argument("auxiliary: noise schedule mismatch at step " + std::to_string(n));
    }
  }

  ReplayedIncrements source(noise.fast_increments());
  Trajectory out;
  out.times = x.times;
  out.states.reserve(steps + 1);
  Field y = model.y0;
  out.states.push_back(y);
  for (std::size_t n = 0; n < steps; ++n) {
    fast.advance(x.states[schedule.block_start(n)], y, nullptr, source);
    out.states.push_back(y);
  }
  return out;
}

Trajectory build_auxiliary(const CoupledRun& run, const ModelSpec& model, const BlockSchedule& schedule,
                           const SchemeParams& params) {
  return build_auxiliary(run.x, run.noise, model, schedule, params);
}

double deviation_statistic(const Trajectory& y, const Trajectory& y_hat) {
  if (y.times != y_hat.times || y.states.size() != y.times.size() || y_hat.states.size() != y.times.size()) {
    throw std::invalid_argument("deviation: trajectories have different time grids");
  }
  double total = 0.0;
  for (std::size_t n = 0; n + 1 < y.times.size(); ++n) {
    const Field d = y.states[n + 1] - y_hat.states[n + 1];
    total += (y.times[n + 1] - y.times[n]) * inner(d, d);
  }
  return total;
}

double increment_statistic(const Trajectory& x, const BlockSchedule& schedule, NormKind kind) {
  if (x.states.size() != schedule.macro_steps + 1 || x.times.size() != x.states.size()) {
    throw std::invalid_argument("increment: trajectory does not match the block schedule");
  }
  double total = 0.0;
  for (std::size_t n = 0; n < schedule.macro_steps; ++n) {
    const double dt_n = x.times[n + 1] - x.times[n];
    total += dt_n * std::pow(norm(x.states[n + 1] - x.states[schedule.block_start(n)], kind), 2);
  }
  return total;
}

void write_khasminskii_csv(std::ostream& out, const std::vector<KhasminskiiRow>& rows) {
  out << "delta,epsilon,statistic_mean,statistic_stderr,replicas\n";
  char line[160];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%zu\n", r.delta, r.epsilon, r.statistic_mean,
                  r.statistic_stderr, r.replicas);
    out << line;
  }
}

}  // namespace slowfast
