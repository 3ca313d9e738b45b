#ifndef SGDINF_VARIANCE_ESTIMATOR_HPP
#define SGDINF_VARIANCE_ESTIMATOR_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sgdinf/core_model.hpp"
#include "sgdinf/sgd_engine.hpp"

namespace sgdinf {

/**
 * Block length t0 over the second half of a length-t stream.
 *
 * paper:  ceil(t^alpha sqrt(d) (ln t + ln d)^2); throws when it exceeds t/2.
 * capped: min(ceil(c0 t^alpha sqrt(d) [log factor]), floor(floor(t/2) / min_blocks)),
 *         and at least 1.
 */
std::uint64_t block_size(const BlockPolicy& policy, std::uint64_t t, int dim,
                         double alpha);

/// Called once per completed block with (block index, functional index, V_k).
using BlockObserver =
    std::function<void(std::uint64_t block, std::size_t functional, double value)>;

/**
 * Block sub-sampling variance estimator with the backward u-recursion.
 *
 * Within a block, the j-th arriving sample (j = 0..t0-1) is charged the step
 * eta_{t-j}. For each functional a:
 *
 *   s   = u^T X
 *   acc += eta^2 (Y - X^T theta_half)^2 s^2
 *   u   -= eta s X
 *
 * and u restarts at a when a block closes. State per functional is one
 * d-vector and two scalars.
 */
class BlockVarianceEstimator {
 public:
  BlockVarianceEstimator(std::vector<Vector> directions, StepSchedule schedule,
                         std::uint64_t t, std::uint64_t t0);

  void set_theta_half(const Vector& theta_half);
  bool ready() const { return theta_half_.size() > 0; }

  /// Feeds one second-half sample. Throws before the snapshot is set.
  void update(const StreamSample& s);

  std::uint64_t completed_blocks() const { return blocks_done_; }
  std::uint64_t block_length() const { return t0_; }
  std::uint64_t horizon() const { return t_; }
  std::size_t functionals() const { return state_.size(); }

  /// Mean of the completed per-block values for functional k.
  double finalize(std::size_t k) const;
  std::vector<double> finalize_all() const;

  /// Running accumulator of the open block (for tests and tracing).
  double open_block_accumulator(std::size_t k) const { return state_[k].block_acc; }
  const Vector& direction_state(std::size_t k) const { return state_[k].u; }

  /// Doubles held as mutable state: per functional u plus two sums, the
  /// snapshot, and block bookkeeping. Independent of t.
  std::size_t state_words() const;

  void set_observer(BlockObserver observer) { observer_ = std::move(observer); }

 private:
  struct PerFunctional {
    Vector u;
    double block_acc = 0.0;
    double total_acc = 0.0;
  };

  std::vector<Vector> directions_;
  std::vector<PerFunctional> state_;
  StepSchedule schedule_;
  std::uint64_t t_;
  std::uint64_t t0_;
  Vector theta_half_;
  std::uint64_t block_pos_ = 0;
  std::uint64_t blocks_done_ = 0;
  BlockObserver observer_;
};

/// V_hat_t = (mean of completed blocks) for functional k.
inline double finalize(const BlockVarianceEstimator& est, std::size_t k) {
  return est.finalize(k);
}

/**
 * Single pass over a stream of known length t: the first ceil(t/2) samples
 * train theta only; the remaining samples train theta and feed the block
 * estimator with the halfway snapshot as plug-in.
 */
class OnlinePass {
 public:
  OnlinePass(std::uint64_t t, StepSchedule schedule, Vector theta0,
             std::vector<Vector> directions, const BlockPolicy& policy);

  void consume(const StreamSample& s);
  bool done() const { return sgd_.iter >= t_; }

  const SgdState& sgd() const { return sgd_; }
  const BlockVarianceEstimator& estimator() const { return est_; }
  BlockVarianceEstimator& estimator() { return est_; }
  std::uint64_t horizon() const { return t_; }

  /// Estimates per functional; throws if no block completed.
  std::vector<double> v_hat() const { return est_.finalize_all(); }

  std::size_t state_words() const;

 private:
  std::uint64_t t_;
  SgdState sgd_;
  BlockVarianceEstimator est_;
};

/// v * (two_m / t)^alpha without the admissibility check.
double dyadic_rescale(double v_hat, std::uint64_t two_m, std::uint64_t t,
                      double alpha);

/// V_hat_t = V_hat_{2^m} (2^m / t)^alpha; requires two_m a power of two and
/// 2 * two_m <= t < 4 * two_m.
double dyadic_extrapolate(double v_hat, std::uint64_t two_m, std::uint64_t t,
                          double alpha);

/**
 * Variance estimation for an unknown stream length. Sample i (1-based)
 * belongs to epoch n = floor(log2 i), covering samples 2^n .. 2^{n+1}-1;
 * each epoch n >= 1 runs its own OnlinePass of length 2^n from theta0.
 * Epochs too short for a block (2^n < 2 * min_blocks, or 2^n < 8) complete
 * without an estimate.
 */
class DyadicEstimator {
 public:
  struct Epoch {
    int n = 0;
    std::optional<std::vector<double>> v_hat;
  };

  DyadicEstimator(StepSchedule schedule, Vector theta0,
                  std::vector<Vector> directions, BlockPolicy policy);

  void update(const StreamSample& s);

  std::uint64_t consumed() const { return consumed_; }
  int current_epoch() const { return epoch_; }
  const std::vector<Epoch>& completed() const { return completed_; }
  std::optional<int> last_completed_epoch() const;

  /// V_hat_{2^n} for functional k; throws if epoch n has no estimate.
  double epoch_estimate(int n, std::size_t k) const;

  /// Estimate for Var<a_k, theta_t> at t = consumed(), from epoch
  /// m = floor(log2 t) - 1.
  double estimate(std::size_t k) const;

 private:
  void open_epoch();

  StepSchedule schedule_;
  Vector theta0_;
  std::vector<Vector> directions_;
  BlockPolicy policy_;
  std::uint64_t consumed_ = 0;
  int epoch_ = 0;
  std::optional<OnlinePass> pass_;
  std::vector<Epoch> completed_;
};

inline void dyadic_update(DyadicEstimator& state, const StreamSample& s) {
  state.update(s);
}

}  // namespace sgdinf

#endif  // SGDINF_VARIANCE_ESTIMATOR_HPP
