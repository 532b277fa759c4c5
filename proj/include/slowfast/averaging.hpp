#pragma once

// Frozen fast equation (slow input held fixed), estimation of the averaged
// coefficient Fbar(x) = E_mu^x F(x, Y), contraction diagnostics and the
// closed form of Fbar for the linear (Ornstein-Uhlenbeck) fast equation.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "slowfast/grid.hpp"
#include "slowfast/integrators.hpp"
#include "slowfast/rng.hpp"

namespace slowfast {

struct FrozenRunSpec {
  Field x_frozen;
  Field y0;
  double t_burn;  // fast-time units
  double t_avg;
  std::size_t n_replicas;
  double dt_fast;

  /// Throws ConfigError on nonpositive entries or fewer than 2 replicas.
  void validate() const;
};

/// Burn-in 8/margin, window 50/margin, 8 replicas, step 0.1/margin.
FrozenRunSpec default_frozen_spec(const ModelSpec& model, const Field& x, const Field& y0);

struct FbarEstimate {
  Field value;
  Field std_error;
  double t_avg_used = 0.0;
  std::size_t replicas_used = 0;
  std::vector<std::string> warnings;
};

/// Frozen trajectory on [0, T] (rounded up to whole steps) with the micro
/// scheme of the coupled fast block at eps = 1.
Trajectory simulate_frozen(const Field& x_frozen, const Field& y0, const ModelSpec& model, double T, double dt_fast,
                           RngStream& stream);
/// Same, over [0, t_burn + t_avg] of `spec`.
Trajectory simulate_frozen(const FrozenRunSpec& spec, const ModelSpec& model, RngStream& stream);

/// Replica r uses RngStream(master_seed, derive_stream_id(stream_base, r)).
/// Each replica averages F(x, Y_m) over the left endpoints of the averaging
/// window; value and std_error are the mean and standard error across
/// replicas. Warns when t_burn < 5/margin.
FbarEstimate estimate_fbar(const ModelSpec& model, const FrozenRunSpec& spec, std::uint64_t master_seed,
                           std::uint64_t stream_base);

struct DecayFit {
  double slope = 0.0;
  double r_squared = 0.0;
  std::size_t samples = 0;
  bool degenerate = false;
  std::string reason;
};

/// Synchronous coupling: two frozen trajectories from y1 and y2 driven by the
/// same increments. Fits log ||Y1 - Y2||_{L2} against t, sampling every step
/// until T or until the difference drops below 1e-14. Fewer than 10 samples
/// yields a degenerate fit.
DecayFit ergodicity_decay(const Field& x, const Field& y1, const Field& y2, const ModelSpec& model, double T,
                          double dt_fast, RngStream& stream);

/// Linear-in-x drift with additive fast noise.
bool is_ou_model(const ModelSpec& model);

/// f0 + c_fx x + c_fy c_b L^{-1} x. Throws ConfigError for non-OU models.
Field oracle_fbar_ou(const Field& x, const ModelSpec& model);

class OuAveragedCoefficient final : public AveragedCoefficient {
 public:
  /// Throws ConfigError for non-OU models.
  explicit OuAveragedCoefficient(const ModelSpec& model);
  Field operator()(const Field& x) override { return oracle_fbar_ou(x, *model_); }

 private:
  const ModelSpec* model_;
};

/// Monte Carlo Fbar with memoization. An exact hit on the nodal values is
/// served from a hash table; otherwise the most recent estimate within the
/// trust radius 0.05 ||x|| + 1e-3 (L2) is reused; otherwise a new estimate is
/// computed and cached. Not thread-safe.
class EstimatedAveragedCoefficient final : public AveragedCoefficient {
 public:
  EstimatedAveragedCoefficient(const ModelSpec& model, std::size_t n_replicas, std::uint64_t master_seed,
                               std::uint64_t stream_base);
  Field operator()(const Field& x) override;

  std::size_t estimates_computed() const { return entries_.size(); }
  std::size_t cache_hits() const { return hits_; }

 private:
  struct Entry {
    Field x;
    Field value;
  };

  const ModelSpec* model_;
  std::size_t n_replicas_;
  std::uint64_t master_seed_;
  std::uint64_t stream_base_;
  std::vector<Entry> entries_;
  std::unordered_map<std::uint64_t, std::size_t> exact_;
  std::size_t hits_ = 0;
};

/// Hash of the nodal bit patterns.
std::uint64_t field_hash(const Field& f);

/// CSV `node,value,std_error`.
void write_fbar_csv(std::ostream& out, const FbarEstimate& estimate);

}  // namespace slowfast
