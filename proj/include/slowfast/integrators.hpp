#pragma once

// Time stepping for the coupled slow-fast system, the averaged slow equation
// and (through FastMicroStepper) the frozen fast equation.
//
// Slow step, drift-implicit in the monotone part:
//   X_{n+1} = X_n + dt [A(X_{n+1}) + forcing_n] + G1(X_n) dW1_n
// (Burgers: only the viscous part is implicit, the convection is explicit).
// Fast block, semi-implicit in the Laplacian, with X frozen at X_n:
//   Y_{m+1} = Y_m + (dt_micro/eps) [-L Y_{m+1} + B2(X_n, Y_m)] + eps^{-1/2} G2(Y_m) dW2_m
// In the coupled run forcing_n is the micro-step average of F(X_n, Y_m) over
// the block that precedes the slow step.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "slowfast/grid.hpp"
#include "slowfast/noise_path.hpp"
#include "slowfast/operators.hpp"
#include "slowfast/rng.hpp"

namespace slowfast {

struct ModelSpec {
  SlowOperatorSpec slow;
  FastOperatorSpec fast;
  CouplingSpec coupling;
  double epsilon;
  Grid1D grid;
  Field x0;
  Field y0;

  double margin() const { return dissipativity_margin(fast, coupling, grid); }
  /// Throws ConfigError on a nonpositive margin, eps outside (0, 1], grid
  /// mismatches, or multiplicative slow noise with the H^{-1} state space.
  void validate() const;
};

struct SchemeParams {
  double dt_macro = 1.0 / 512.0;
  /// Fast-time resolution dt_micro/eps; <= 0 selects 0.1 / margin.
  double dt_fast_target = 0.0;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;

  double resolved_fast_target(double margin) const;
  /// ceil(dt_macro / (eps * fast target)), at least 1.
  std::size_t micro_substeps(double epsilon, double margin) const;
  void validate() const;
};

struct CoupledState {
  Field x;
  Field y;
  double t = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> states;
};

struct TrajectoryStats {
  double sup_norm_x_sq = 0.0;   // max over stored times of ||X||^2 in H1
  double mean_norm_y_sq = 0.0;  // (1/T) sum dt ||Y_{n+1}||^2_{L2}
  /// delta -> sum_n dt ||X_{n+1} - X_{block start of step n}||^2_{H1}
  std::map<double, double> increment_integral;
};

struct CoupledRun {
  Trajectory x;
  Trajectory y;
  NoisePath noise;
  TrajectoryStats stats;
};

struct RunOptions {
  bool record = true;
  /// Block lengths for the on-the-fly increment statistic; each must be an
  /// integer multiple of dt_macro.
  std::vector<double> stat_deltas;
};

/// Number of macro steps covering [0, T]; throws ConfigError unless T is an
/// integer multiple of dt.
std::size_t macro_step_count(double T, double dt);
/// delta / dt as an integer; throws ConfigError when not aligned.
std::size_t steps_per_block(double delta, double dt);

/// Implicit slow step with prefactored/Newton solves.
class SlowStepper {
 public:
  SlowStepper(const ModelSpec& model, const SchemeParams& params);

  /// Returns X_{n+1}. Throws NewtonDivergence when the implicit solve misses
  /// the tolerance, NumericalFailure on non-finite output.
  Field step(const Field& x, const Field& forcing, std::span<const double> dw);

  std::size_t noise_modes() const { return basis_.modes(); }
  /// Max-norm of the implicit-equation residual of the last step.
  double last_residual() const { return last_residual_; }
  int last_iterations() const { return last_iterations_; }

 private:
  Field newton_solve(const Field& rhs, const Field& guess);

  const ModelSpec* model_;
  SchemeParams params_;
  NoiseBasis basis_;
  std::optional<ShiftedLaplacianSolver> viscous_;
  std::vector<double> noise_;
  double last_residual_ = 0.0;
  int last_iterations_ = 0;
};

/// One semi-implicit micro step of the fast equation with step ratio
/// tau = dt_micro/eps and noise factor eps^{-1/2}.
class FastMicroStepper {
 public:
  FastMicroStepper(const ModelSpec& model, double tau, double noise_factor);

  void step(const Field& x, Field& y, std::span<const double> dw);
  std::size_t noise_modes() const { return basis_.modes(); }
  double tau() const { return tau_; }

 private:
  const FastOperatorSpec* fast_;
  double tau_;
  double noise_factor_;
  NoiseBasis basis_;
  ShiftedLaplacianSolver solver_;
  std::vector<double> noise_;
  std::vector<double> dw_;
};

/// n_sub micro steps across one macro step of the coupled fast equation.
class FastBlockStepper {
 public:
  FastBlockStepper(const ModelSpec& model, const SchemeParams& params);

  std::size_t substeps() const { return substeps_; }
  double dt_micro() const { return dt_micro_; }

  /// Advances y with x frozen. When `y_mean` is given it receives the average
  /// of the micro states Y_0..Y_{n_sub-1}. When `record` is given every
  /// increment drawn is appended to it.
  void advance(const Field& x, Field& y, Field* y_mean, IncrementSource& noise, NoisePath* record = nullptr);

 private:
  std::size_t substeps_;
  double dt_micro_;
  FastMicroStepper micro_;
  std::vector<double> dw_;
};

/// Spec-level single slow step: forcing F(state.x, state.y).
Field step_slow(const ModelSpec& model, const CoupledState& state, std::span<const double> dw_slow,
                const SchemeParams& params);

/// Spec-level fast block: new Y and the flat list of micro increments drawn.
std::pair<Field, std::vector<double>> step_fast_block(const ModelSpec& model, const CoupledState& state,
                                                      const SchemeParams& params, RngStream& stream);

/// Full coupled trajectory on [0, T]; slow and fast noise come from separate
/// streams (independent Wiener processes).
CoupledRun simulate_coupled(const ModelSpec& model, double T, const SchemeParams& params, RngStream& slow_stream,
                            RngStream& fast_stream, const RunOptions& options = {});

/// Coupled trajectory driven by a recorded noise path; reproduces the
/// recording run bit for bit. The returned run carries a copy of `noise`.
CoupledRun replay_coupled(const ModelSpec& model, double T, const SchemeParams& params, const NoisePath& noise,
                          const RunOptions& options = {});

/// Supplies the averaged drift Fbar(x).
class AveragedCoefficient {
 public:
  virtual ~AveragedCoefficient() = default;
  virtual Field operator()(const Field& x) = 0;
};

/// Averaged slow equation driven by the slow increments of `noise`, with the
/// same scheme as the coupled slow step and forcing Fbar(X_n).
Trajectory simulate_averaged(const ModelSpec& model, AveragedCoefficient& fbar, double T, const SchemeParams& params,
                             const NoisePath& noise);

/// sup over stored times of ||a_t - b_t||^2 in `norm`; throws
/// std::invalid_argument on mismatched time grids.
double strong_error(const Trajectory& a, const Trajectory& b, NormKind norm);

}  // namespace slowfast
