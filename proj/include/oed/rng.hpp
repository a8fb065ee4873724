#pragma once

#include "oed/types.hpp"

#include <cstdint>
#include <random>

namespace oed {

/// Seedable 64-bit generator with reproducible output on every platform.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. Distributions are implemented here rather than taken from
/// <random>, because the standard library distributions are allowed to
/// differ between implementations:
///   - uniform reals use the top 53 bits of one draw;
///   - bounded integers use rejection sampling on the top bits;
///   - normals use the Box-Muller transform, returning the cosine branch
///     first and caching the sine branch for the next call.
///
/// Substreams: stream(seed, k) seeds an independent engine with
/// splitmix64(seed + (k + 1) * 0x9E3779B97F4A7C15). Experiment drivers use
/// one substream per repetition.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in (0, 1].
  double uniform_open_zero() { return 1.0 - uniform(); }
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  double normal();
  Vector normal_vector(Index n);
  Matrix normal_matrix(Index rows, Index cols);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace oed
