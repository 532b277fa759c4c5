#include "slowfast/rng.hpp"

#include <array>

namespace slowfast {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_stream_id(std::uint64_t parent, std::uint64_t child) {
  return mix64(mix64(parent) ^ (child * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL));
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t master_seed, std::uint64_t stream_id) {
  std::array<std::uint32_t, 8> words{};
  std::uint64_t state = mix64(master_seed) ^ mix64(stream_id + 0x632be59bd9b4e019ULL);
  for (std::size_t i = 0; i < words.size(); i += 2) {
    state = mix64(state);
    words[i] = static_cast<std::uint32_t>(state);
    words[i + 1] = static_cast<std::uint32_t>(state >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id), engine_(seeded_engine(master_seed, stream_id)) {}

void RngStream::fill_normal(std::span<double> out) {
  for (double& v : out) v = normal_(engine_);
}

std::vector<double> gaussian_increments(RngStream& stream, std::size_t count) {
  std::vector<double> out(count);
  stream.fill_normal(out);
  return out;
}

}  // namespace slowfast
