#include "sgdinf/rng.hpp"

#include <cmath>
#include <array>

namespace sgdinf {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = std::uint64_t(a) * b;
  hi = std::uint32_t(p >> 32);
  lo = std::uint32_t(p);
}

}  // namespace

Philox4x32::Counter Philox4x32::generate(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

SampleRng::SampleRng(std::uint64_t seed, std::uint32_t stream,
                     std::uint64_t sample)
    : ctr_{0u, std::uint32_t(sample), std::uint32_t(sample >> 32), stream},
      key_{std::uint32_t(seed), std::uint32_t(seed >> 32)} {}

void SampleRng::refill() {
  buf_ = Philox4x32::generate(ctr_, key_);
  ++ctr_[0];
  used_ = 0;
}

std::uint64_t SampleRng::next64() {
  if (used_ > 2) refill();
  const std::uint64_t v = (std::uint64_t(buf_[used_]) << 32) | buf_[used_ + 1];
  used_ += 2;
  return v;
}

double SampleRng::uniform() {
  return (double(next64() >> 11) + 0.5) * 0x1.0p-53;
}

bool SampleRng::coin() { return (next64() >> 63) != 0; }

namespace {

// 128-layer ziggurat (Marsaglia & Tsang 2000; table layout after Doornik 2005).
constexpr int kLayers = 128;
constexpr double kZigR = 3.442619855899;
constexpr double kZigV = 9.91256303526217e-3;

struct ZigguratTables {
  std::array<double, kLayers + 1> x;
  std::array<double, kLayers> ratio;

  ZigguratTables() {
    double f = std::exp(-0.5 * kZigR * kZigR);
    x[0] = kZigV / f;
    x[1] = kZigR;
    x[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kZigV / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigguratTables& zig() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace

double SampleRng::normal() {
  const auto& z = zig();
  for (;;) {
    const std::uint64_t bits = next64();
    // Bits 11..63 give the abscissa, bits 0..6 the layer.
    const double u = 2.0 * ((double(bits >> 11) + 0.5) * 0x1.0p-53) - 1.0;
    const int i = int(bits & 0x7F);
    if (std::abs(u) < z.ratio[i]) return u * z.x[i];
    if (i == 0) {
      double tx, ty;
      do {
        tx = std::log(uniform()) / kZigR;
        ty = std::log(uniform());
      } while (-2.0 * ty < tx * tx);
      return u < 0.0 ? tx - kZigR : kZigR - tx;
    }
    const double x = u * z.x[i];
    const double f0 = std::exp(-0.5 * (z.x[i] * z.x[i] - x * x));
    const double f1 = std::exp(-0.5 * (z.x[i + 1] * z.x[i + 1] - x * x));
    if (f1 + uniform() * (f0 - f1) < 1.0) return x;
  }
}

double SampleRng::gamma(double shape) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace sgdinf
