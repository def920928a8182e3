#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace beaq {

/// Philox4x32-10 block function (Salmon et al., SC'11). Maps a 128-bit
/// counter and a 64-bit key to 128 pseudo-random bits.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Mixes a list of integers into one 64-bit stream identifier.
std::uint64_t stream_id(std::initializer_list<std::uint64_t> path);

/// Counter-based random stream. Every value is a pure function of
/// (seed, stream, position), so work split across any number of workers
/// reproduces the same numbers as long as each logical item owns its stream.
///
/// Satisfies UniformRandomBitGenerator, but the distributions below should be
/// preferred over <random> ones: those are implementation-defined, these are
/// bit-stable across platforms.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  CounterStream(std::uint64_t seed, std::uint64_t stream);

  /// Stream keyed by a path such as {point, draw} or {repeat, point, tag}.
  static CounterStream keyed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    return CounterStream(seed, stream_id(path));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1): never returns an endpoint.
  double uniform_open();
  /// Standard normal via Box-Muller.
  double normal();
  /// log of a Gamma(shape, 1) variate. Stays finite for small shapes where
  /// the variate itself underflows.
  double log_gamma_variate(double shape);
  /// Standard Gumbel (location 0, scale 1).
  double gumbel();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Stream tags used in stream keys. Values are part of the reproducibility
/// contract; do not renumber.
enum class StreamTag : std::uint64_t {
  kRandomScore = 0x52414e44,  // "RAND"
  kPowerBald = 0x50574244,    // "PWBD"
  kPoolMean = 0x4d45414e,     // "MEAN"
  kPoolDraws = 0x44525753,    // "DRWS"
  kDropout = 0x44524f50,      // "DROP"
  kInit = 0x494e4954,         // "INIT"
  kShuffle = 0x53485546,      // "SHUF"
  kMoons = 0x4d4f4f4e,        // "MOON"
  kLoop = 0x4c4f4f50,         // "LOOP"
};

constexpr std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

}  // namespace beaq
