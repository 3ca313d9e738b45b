#ifndef SGDINF_RNG_HPP
#define SGDINF_RNG_HPP

#include <array>
#include <cstdint>

namespace sgdinf {

/// Philox4x32-10 block function (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key);
};

/// SplitMix64 finalizer; used to derive independent seeds from a base seed.
std::uint64_t mix64(std::uint64_t x);

/**
 * Draws for a single stream sample. The Philox counter is
 * (draw block, sample lo, sample hi, stream), keyed by the seed, so the
 * randomness of sample i in replicate r depends on (seed, r, i) only.
 */
class SampleRng {
 public:
  SampleRng(std::uint64_t seed, std::uint32_t stream, std::uint64_t sample);

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  /// Standard normal by the ziggurat method.
  double normal();
  /// Gamma(shape, 1) by Marsaglia-Tsang; shape >= 1.
  double gamma(double shape);
  bool coin();

 private:
  std::uint64_t next64();
  void refill();

  Philox4x32::Counter ctr_;
  Philox4x32::Key key_;
  Philox4x32::Counter buf_{};
  int used_ = 4;
};

}  // namespace sgdinf

#endif  // SGDINF_RNG_HPP
