#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "cmvlab/types.hpp"

namespace cmvlab {

/// Philox4x32-10 block cipher used as a counter-based generator
/// (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter encrypt(Counter ctr, Key key);
};

/// A reproducible stream of random numbers identified by (seed, stream_index).
///
/// The seed is the cipher key and the stream index occupies the upper half
/// of the 128-bit counter, so distinct streams never overlap. Copies share no
/// state: copying a stream and drawing from both yields identical sequences.
/// Satisfies UniformRandomBitGenerator.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_index);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_index() const { return stream_; }

  /// Independent child stream; the same (parent, tag) always gives the same child.
  RngStream substream(std::uint64_t tag) const;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64();
  /// Uniform on [0, 1), 53 random bits.
  double uniform();
  /// Uniform on the open interval (0, 1).
  double uniform_open();
  /// Uniform on [0, 2pi).
  double angle();
  /// Standard normal via Box-Muller; pairs are cached.
  double normal();

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// SplitMix64 finalizer; used to derive stream identifiers.
std::uint64_t mix64(std::uint64_t x);

}  // namespace cmvlab
