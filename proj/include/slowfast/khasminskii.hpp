#pragma once

// Auxiliary fast process with the slow input frozen on blocks of length
// delta, and the two path statistics built on it:
//   deviation  = int_0^T ||Y_t - Yhat_t||^2_{L2} dt
//   increment  = int_0^T ||X_t - X_{t(delta)}||^2_{H1} dt,  t(delta) = floor(t/delta) delta
// Both use the right-endpoint rule on the macro grid,
//   sum_n (t_{n+1} - t_n) ||Z_{n+1}||^2,
// which is also what the coupled integrator accumulates on the fly.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "slowfast/grid.hpp"
#include "slowfast/integrators.hpp"
#include "slowfast/noise_path.hpp"

namespace slowfast {

struct BlockSchedule {
  double delta = 0.0;
  double T = 0.0;
  double dt_macro = 0.0;
  std::size_t steps_per_block = 0;
  std::size_t macro_steps = 0;
  std::vector<double> boundaries;  // k delta for k = 0..ceil(T/delta), capped at T

  /// Throws ConfigError unless 0 < delta <= T and both are integer multiples
  /// of dt_macro.
  static BlockSchedule make(double delta, double T, double dt_macro);
  /// Index of the macro step that opens the block containing step n.
  std::size_t block_start(std::size_t n) const { return (n / steps_per_block) * steps_per_block; }
};

/// Yhat driven by the fast increments of `noise`, with the slow input frozen
/// at X_{k delta} on each block and Yhat_0 = model.y0. Throws
/// std::invalid_argument when the trajectory, noise path and schedule do not
/// line up.
Trajectory build_auxiliary(const Trajectory& x, const NoisePath& noise, const ModelSpec& model,
                           const BlockSchedule& schedule, const SchemeParams& params);
Trajectory build_auxiliary(const CoupledRun& run, const ModelSpec& model, const BlockSchedule& schedule,
                           const SchemeParams& params);

/// Throws std::invalid_argument on different time grids.
double deviation_statistic(const Trajectory& y, const Trajectory& y_hat);

/// Throws std::invalid_argument when the trajectory does not match the
/// schedule's macro grid.
double increment_statistic(const Trajectory& x, const BlockSchedule& schedule, NormKind kind);

struct KhasminskiiRow {
  double delta = 0.0;
  double epsilon = 0.0;
  double statistic_mean = 0.0;
  double statistic_stderr = 0.0;
  std::size_t replicas = 0;
};

/// CSV `delta,epsilon,statistic_mean,statistic_stderr,replicas`.
void write_khasminskii_csv(std::ostream& out, const std::vector<KhasminskiiRow>& rows);

}  // namespace slowfast
