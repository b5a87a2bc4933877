#ifndef PERPETUA_RNG_HPP
#define PERPETUA_RNG_HPP

#include <array>
#include <cstdint>
#include <limits>

namespace perpetua {

/// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
///
/// A stream is fully determined by (seed, stream id): the seed is the key and
/// the stream id occupies the upper half of the 128-bit counter. Replication
/// r of an experiment uses stream r, so results never depend on which worker
/// ran the replication or in what order.
class RandomStream {
public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return next_u64(); }
  result_type next_u64();

  /// Uniform on the open interval (0, 1), 53 bits of resolution.
  double uniform();
  /// Standard exponential by inversion.
  double exponential();
  /// Standard normal (Box-Muller, second variate cached).
  double normal();
  /// Gamma(shape, 1) by Marsaglia-Tsang.
  double gamma(double shape);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// One application of the ten-round bijection; exposed for known-answer
  /// tests.
  static Block philox(Block counter, Key key);

private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  Block buffer_{};
  int buffered_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Streams at or above this id are reserved for auxiliary estimation work
/// (variance estimates, root finding) so they never collide with
/// replication streams.
inline constexpr std::uint64_t kAuxiliaryStreamBase = std::uint64_t{1} << 63;

} // namespace perpetua

#endif // PERPETUA_RNG_HPP
