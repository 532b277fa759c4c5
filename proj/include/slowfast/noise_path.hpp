#pragma once

// Recorded Brownian mode increments of one coupled run, replayable across
// process invocations.
//
// Binary layout (all integers and floats little-endian):
//   bytes 0..7   magic "SFNOISE1"
//   u32          version (= 1)
//   u32          reserved (= 0)
//   u64          macro step count N
//   u64          slow mode count
//   u64          fast mode count
//   N x (f64 dt_macro, u64 substeps)        dt schedule
//   N x slow_modes f64                      slow increments, step-major
//   (sum substeps) x fast_modes f64         fast increments, micro-step-major

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "slowfast/rng.hpp"

namespace slowfast {

class NoisePath {
 public:
  static constexpr std::uint32_t kVersion = 1;

  NoisePath() = default;
  NoisePath(std::size_t slow_modes, std::size_t fast_modes) : slow_modes_(slow_modes), fast_modes_(fast_modes) {}

  std::size_t slow_modes() const { return slow_modes_; }
  std::size_t fast_modes() const { return fast_modes_; }
  std::size_t steps() const { return dt_.size(); }
  double dt(std::size_t step) const { return dt_[step]; }
  std::size_t substeps(std::size_t step) const { return substeps_[step]; }

  /// Opens macro step `steps()` with the given schedule entry.
  void begin_step(double dt_macro, std::size_t substeps);
  void push_slow(std::span<const double> dw);
  void push_fast(std::span<const double> dw);

  std::span<const double> slow_increments() const { return slow_; }
  std::span<const double> fast_increments() const { return fast_; }
  std::span<double> mutable_fast_increments() { return fast_; }
  std::span<double> mutable_slow_increments() { return slow_; }

  /// Fast increments belonging to macro step `step`.
  std::span<const double> fast_block(std::size_t step) const;
  std::span<const double> slow_step(std::size_t step) const;

  /// Throws std::runtime_error when counts disagree with the schedule.
  void validate() const;

  void write(std::ostream& out) const;
  static NoisePath read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static NoisePath load(const std::filesystem::path& path);

  bool operator==(const NoisePath&) const = default;

 private:
  std::size_t slow_modes_ = 0;
  std::size_t fast_modes_ = 0;
  std::vector<double> dt_;
  std::vector<std::size_t> substeps_;
  std::vector<std::size_t> fast_offset_;  // first micro step of each macro step
  std::vector<double> slow_;
  std::vector<double> fast_;
};

/// Supplies Brownian increments for one noise channel, one step at a time.
class IncrementSource {
 public:
  virtual ~IncrementSource() = default;
  /// Fills `out` (one entry per mode) with the increments over a step of size dt.
  virtual void next(double dt, std::span<double> out) = 0;
};

/// sqrt(dt) * standard normals from a stream.
class DrawnIncrements final : public IncrementSource {
 public:
  explicit DrawnIncrements(RngStream& stream) : stream_(stream) {}
  void next(double dt, std::span<double> out) override;

 private:
  RngStream& stream_;
};

/// Sequential replay of stored increments; throws std::runtime_error when
/// exhausted.
class ReplayedIncrements final : public IncrementSource {
 public:
  explicit ReplayedIncrements(std::span<const double> data) : data_(data) {}
  void next(double dt, std::span<double> out) override;
  std::size_t consumed() const { return pos_; }

 private:
  std::span<const double> data_;
  std::size_t pos_ = 0;
};

}  // namespace slowfast
