#include "reach/noise.hpp"

#include <cmath>
#include <numbers>

namespace reach {

std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

NoiseStream::NoiseStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : master_seed_(master_seed), stream_id_(stream_id) {
  const std::uint64_t key = mix64(mix64(master_seed) ^ stream_id);
  offset_ = mix64(key);
  increment_ = mix64(key ^ 0x632be59bd9b4e019ULL) | 1ULL;
}

std::uint64_t NoiseStream::next_bits() {
  ++counter_;
  return mix64(offset_ + counter_ * increment_);
}

double NoiseStream::uniform() {
  return (static_cast<double>(next_bits() >> 11) + 0.5) * 0x1.0p-53;
}

double NoiseStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

void NoiseStream::fill_gaussian(std::span<double> out) {
  for (double& v : out) v = gaussian();
}

}  // namespace reach
