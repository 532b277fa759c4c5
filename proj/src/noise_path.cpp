#include "slowfast/noise_path.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace slowfast {

namespace {

constexpr std::array<char, 8> kMagic{'S', 'F', 'N', 'O', 'I', 'S', 'E', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes{};
  for (std::size_t i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  out.write(bytes.data(), bytes.size());
}

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> bytes{};
  for (std::size_t i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  out.write(bytes.data(), bytes.size());
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw std::runtime_error("noise path: truncated input");
  }
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw std::runtime_error("noise path: truncated input");
  }
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace

void NoisePath::begin_step(double dt_macro, std::size_t substeps) {
  fast_offset_.push_back(fast_offset_.empty() ? 0 : fast_offset_.back() + substeps_.back());
  dt_.push_back(dt_macro);
  substeps_.push_back(substeps);
}

void NoisePath::push_slow(std::span<const double> dw) {
  if (dw.size() != slow_modes_) throw std::invalid_argument("noise path: slow increment size mismatch");
  slow_.insert(slow_.end(), dw.begin(), dw.end());
}

void NoisePath::push_fast(std::span<const double> dw) {
  if (dw.size() != fast_modes_) throw std::invalid_argument("noise path: fast increment size mismatch");
  fast_.insert(fast_.end(), dw.begin(), dw.end());
}

std::span<const double> NoisePath::fast_block(std::size_t step) const {
  return std::span<const double>(fast_).subspan(fast_offset_[step] * fast_modes_, substeps_[step] * fast_modes_);
}

std::span<const double> NoisePath::slow_step(std::size_t step) const {
  return std::span<const double>(slow_).subspan(step * slow_modes_, slow_modes_);
}

void NoisePath::validate() const {
  std::size_t micro = 0;
  for (std::size_t s : substeps_) micro += s;
  if (slow_.size() != dt_.size() * slow_modes_ || fast_.size() != micro * fast_modes_) {
    throw std::runtime_error("noise path: increment counts do not match the schedule");
  }
}

void NoisePath::write(std::ostream& out) const {
  validate();
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kVersion);
  put_u32(out, 0);
  put_u64(out, dt_.size());
  put_u64(out, slow_modes_);
  put_u64(out, fast_modes_);
  for (std::size_t n = 0; n < dt_.size(); ++n) {
    put_f64(out, dt_[n]);
    put_u64(out, substeps_[n]);
  }
  for (double v : slow_) put_f64(out, v);
  for (double v : fast_) put_f64(out, v);
  if (!out) throw std::runtime_error("noise path: write failed");
}

NoisePath NoisePath::read(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw std::runtime_error("noise path: bad magic");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) throw std::runtime_error("noise path: unsupported version " + std::to_string(version));
  (void)get_u32(in);
  const std::uint64_t steps = get_u64(in);
  const std::uint64_t slow_modes = get_u64(in);
  const std::uint64_t fast_modes = get_u64(in);
  NoisePath path(slow_modes, fast_modes);
  std::uint64_t micro = 0;
  for (std::uint64_t n = 0; n < steps; ++n) {
    const double dt = get_f64(in);
    const std::uint64_t sub = get_u64(in);
    path.begin_step(dt, sub);
    micro += sub;
  }
  path.slow_.resize(steps * slow_modes);
  for (double& v : path.slow_) v = get_f64(in);
  path.fast_.resize(micro * fast_modes);
  for (double& v : path.fast_) v = get_f64(in);
  return path;
}

void NoisePath::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("noise path: cannot open " + path.string());
  write(out);
}

NoisePath NoisePath::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("noise path: cannot open " + path.string());
  return read(in);
}

void DrawnIncrements::next(double dt, std::span<double> out) {
  const double s = std::sqrt(dt);
  stream_.fill_normal(out);
  for (double& v : out) v *= s;
}

void ReplayedIncrements::next(double /*dt*/, std::span<double> out) {
  if (pos_ + out.size() > data_.size()) throw std::runtime_error("noise replay exhausted");
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(pos_), out.size(), out.begin());
  pos_ += out.size();
}

}  // namespace slowfast
