#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace slowfast {

/// splitmix64 finalizer; used to derive engine seeds and stream ids.
std::uint64_t mix64(std::uint64_t x);

/// Combines a parent id with a child index into a new stream id.
std::uint64_t derive_stream_id(std::uint64_t parent, std::uint64_t child);

/// Gaussian variate stream keyed by (master_seed, stream_id). Equal keys give
/// equal sequences; distinct stream ids seed the engine from disjoint hashed
/// keys. Not thread-safe: one stream per replica.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  double normal() { return normal_(engine_); }
  void fill_normal(std::span<double> out);

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// `count` i.i.d. standard normal variates drawn from `stream`.
std::vector<double> gaussian_increments(RngStream& stream, std::size_t count);

}  // namespace slowfast
