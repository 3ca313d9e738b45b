#ifndef SGDINF_SGD_ENGINE_HPP
#define SGDINF_SGD_ENGINE_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>

#include "sgdinf/core_model.hpp"
#include "sgdinf/datagen.hpp"

namespace sgdinf {

/**
 * Least-squares online SGD state: theta_i after `iter` updates, plus the
 * snapshot theta_{ceil(t/2)} when the horizon t is known.
 *
 * Holds at most two d-vectors and a handful of scalars regardless of t.
 */
struct SgdState {
  Vector theta;
  std::uint64_t iter = 0;
  std::optional<Vector> theta_half;
  StepSchedule schedule;
  std::optional<std::uint64_t> horizon;

  static SgdState start(Vector theta0, StepSchedule schedule,
                        std::optional<std::uint64_t> horizon = std::nullopt);

  /// ceil(t/2); the snapshot index. Requires a known horizon.
  std::uint64_t halfway() const;

  /// Number of doubles held (theta, optional snapshot, iter).
  std::size_t state_words() const;
};

/// theta_i = theta_{i-1} + eta_i X_i (Y_i - <X_i, theta_{i-1}>), in place.
void apply_step(SgdState& state, const StreamSample& s);

/// Value-semantics form of apply_step.
SgdState sgd_step(SgdState state, const StreamSample& s);

/// Consumes exactly config.t samples from `stream` starting from the
/// configured theta0.
SgdState run_sgd(const RunConfig& config, StreamHandle& stream);

/**
 * Binary checkpoint of (theta, iter, stream position). Layout, all integers
 * and floats little-endian:
 *
 *   offset 0   8 bytes  magic "SGDCKPT1"
 *   offset 8   u64      dim
 *   offset 16  u64      iter
 *   offset 24  u64      stream position (next sample index)
 *   offset 32  f64[dim] theta
 */
struct Checkpoint {
  Vector theta;
  std::uint64_t iter = 0;
  std::uint64_t stream_position = 0;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

}  // namespace sgdinf

#endif  // SGDINF_SGD_ENGINE_HPP
