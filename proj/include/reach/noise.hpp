#pragma once

#include <cstdint>
#include <span>

namespace reach {

/// Counter-based Gaussian source for one Monte Carlo trial.
///
/// Draw k of stream (seed, id) is a pure function of (seed, id, k): a
/// SplitMix64-style finalizer applied to a per-stream Weyl sequence whose
/// offset and increment are both hashed from (seed, id). Equal (seed, id)
/// reproduce the same sequence bit for bit; distinct ids are independent
/// for all practical purposes. Gaussians come from Box–Muller pairs.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t master_seed, std::uint64_t stream_id);

  /// Uniform on the open interval (0, 1).
  double uniform();
  double gaussian();
  void fill_gaussian(std::span<double> out);

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t next_bits();

  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
  std::uint64_t offset_;
  std::uint64_t increment_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z) noexcept;

}  // namespace reach
