#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace gridsel {

/// Philox4x32-10 (Salmon et al., SC'11). The 128-bit counter is split into a
/// 64-bit stream id and a 64-bit position, the 64-bit key is the seed, so
/// (seed, stream) names a reproducible, platform-independent sequence.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Raw bijection, exposed for known-answer tests.
  static Counter block(Counter counter, Key key);

 private:
  void refill();

  Key key_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  Counter buffer_{};
  int next_ = 4;
};

/// Stream ids for the different consumers, so draws for one purpose never alias
/// another purpose's stream under the same seed.
enum class StreamTag : std::uint64_t {
  poisson_field = 1,
  monte_carlo = 2,
  oracle_noise = 3,
  synth_events = 4,
  test_fixture = 15,
};

inline std::uint64_t stream_id(StreamTag tag, std::uint64_t index) {
  return (static_cast<std::uint64_t>(tag) << 56) ^ (index & 0x00FF'FFFF'FFFF'FFFFULL);
}

/// Poisson(rate) draw; rate == 0 gives 0.
std::int64_t draw_poisson(Philox4x32& rng, double rate);
/// Laplace(0, scale) draw; E|X| = scale.
double draw_laplace(Philox4x32& rng, double scale);

}  // namespace gridsel
