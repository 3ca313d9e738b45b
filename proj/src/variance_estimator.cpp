#include "sgdinf/variance_estimator.hpp"

#include <bit>
#include <cmath>
#include <sstream>

namespace sgdinf {

std::uint64_t block_size(const BlockPolicy& policy, std::uint64_t t, int dim,
                         double alpha) {
  if (t < 8) throw ContractError("block size requires t >= 8");
  if (dim < 1) throw ContractError("dim must be at least 1");
  const double td = double(t);
  const double log_sq = std::pow(std::log(td) + std::log(double(dim)), 2);
  const double base = std::pow(td, alpha) * std::sqrt(double(dim));

  if (policy.mode == BlockMode::paper) {
    const double t0 = std::ceil(base * log_sq);
    if (t0 > 0.5 * td) {
      std::ostringstream msg;
      msg << "paper block size " << t0 << " exceeds t/2 = " << 0.5 * td
          << "; use the capped block policy";
      throw ContractError(msg.str());
    }
    return std::uint64_t(t0);
  }

  if (!(policy.c0 > 0.0)) throw ContractError("c0 must be positive");
  if (policy.min_blocks < 1) throw ContractError("min_blocks must be >= 1");
  const double raw =
      std::ceil(policy.c0 * base * (policy.include_log_factor ? log_sq : 1.0));
  const std::uint64_t cap = (t / 2) / std::uint64_t(policy.min_blocks);
  std::uint64_t t0 = raw >= double(cap) ? cap : std::uint64_t(raw);
  return t0 < 1 ? 1 : t0;
}

BlockVarianceEstimator::BlockVarianceEstimator(std::vector<Vector> directions,
                                               StepSchedule schedule,
                                               std::uint64_t t, std::uint64_t t0)
    : directions_(std::move(directions)), schedule_(schedule), t_(t), t0_(t0) {
  if (directions_.empty()) throw ContractError("no functionals given");
  if (t0 < 1 || t0 > t) throw ContractError("block length must lie in [1, t]");
  state_.reserve(directions_.size());
  for (const auto& a : directions_) {
    if (a.size() != schedule.dim()) {
      throw ContractError("functional dimension does not match the schedule");
    }
    state_.push_back({a, 0.0, 0.0});
  }
}

void BlockVarianceEstimator::set_theta_half(const Vector& theta_half) {
  if (theta_half.size() != schedule_.dim()) {
    throw ContractError("snapshot dimension does not match the schedule");
  }
  theta_half_ = theta_half;
}

void BlockVarianceEstimator::update(const StreamSample& s) {
  if (!ready()) throw ContractError("estimator used before theta_half is set");
  if (s.x.size() != theta_half_.size()) {
    throw ContractError("sample dimension mismatch");
  }
  const double eta = schedule_.step(t_ - block_pos_);
  const double residual = s.y - s.x.dot(theta_half_);
  const double weight = eta * eta * residual * residual;
  for (auto& f : state_) {
    const double proj = f.u.dot(s.x);
    f.block_acc += weight * proj * proj;
    f.u.noalias() -= (eta * proj) * s.x;
  }
  if (++block_pos_ == t0_) {
    for (std::size_t k = 0; k < state_.size(); ++k) {
      auto& f = state_[k];
      if (observer_) observer_(blocks_done_, k, f.block_acc);
      f.total_acc += f.block_acc;
      f.block_acc = 0.0;
      f.u = directions_[k];
    }
    block_pos_ = 0;
    ++blocks_done_;
  }
}

double BlockVarianceEstimator::finalize(std::size_t k) const {
  if (blocks_done_ == 0) throw NumericError("no completed variance block");
  return state_.at(k).total_acc / double(blocks_done_);
}

std::vector<double> BlockVarianceEstimator::finalize_all() const {
  std::vector<double> out(state_.size());
  for (std::size_t k = 0; k < state_.size(); ++k) out[k] = finalize(k);
  return out;
}

std::size_t BlockVarianceEstimator::state_words() const {
  std::size_t words = std::size_t(theta_half_.size()) + 2;
  for (const auto& f : state_) words += std::size_t(f.u.size()) + 2;
  return words;
}

OnlinePass::OnlinePass(std::uint64_t t, StepSchedule schedule, Vector theta0,
                       std::vector<Vector> directions, const BlockPolicy& policy)
    : t_(t),
      sgd_(SgdState::start(std::move(theta0), schedule, t)),
      est_(std::move(directions), schedule, t,
           block_size(policy, t, schedule.dim(), schedule.alpha())) {}

void OnlinePass::consume(const StreamSample& s) {
  if (done()) throw ContractError("stream longer than the configured horizon");
  apply_step(sgd_, s);
  const std::uint64_t half = sgd_.halfway();
  if (sgd_.iter == half) {
    est_.set_theta_half(*sgd_.theta_half);
  } else if (sgd_.iter > half) {
    est_.update(s);
  }
}

std::size_t OnlinePass::state_words() const {
  return std::size_t(sgd_.theta.size()) + 1 + est_.state_words();
}

double dyadic_rescale(double v_hat, std::uint64_t two_m, std::uint64_t t,
                      double alpha) {
  return v_hat * std::pow(double(two_m) / double(t), alpha);
}

double dyadic_extrapolate(double v_hat, std::uint64_t two_m, std::uint64_t t,
                          double alpha) {
  if (two_m < 2 || !std::has_single_bit(two_m)) {
    throw ContractError("2^m must be a power of two with m >= 1");
  }
  if (t < 2 * two_m || t >= 4 * two_m) {
    throw ContractError("t must satisfy 2^{m+1} <= t < 2^{m+2}");
  }
  return dyadic_rescale(v_hat, two_m, t, alpha);
}

DyadicEstimator::DyadicEstimator(StepSchedule schedule, Vector theta0,
                                 std::vector<Vector> directions,
                                 BlockPolicy policy)
    : schedule_(schedule),
      theta0_(std::move(theta0)),
      directions_(std::move(directions)),
      policy_(policy) {
  if (theta0_.size() != schedule_.dim()) {
    throw ContractError("theta0 dimension does not match the schedule");
  }
}

void DyadicEstimator::open_epoch() {
  pass_.reset();
  const std::uint64_t len = std::uint64_t(1) << epoch_;
  try {
    pass_.emplace(len, schedule_, theta0_, directions_, policy_);
  } catch (const ContractError&) {
    // Epoch too short for a block: it completes without an estimate.
  }
}

void DyadicEstimator::update(const StreamSample& s) {
  const std::uint64_t i = ++consumed_;
  const int n = std::bit_width(i) - 1;
  if (n == 0) return;
  if (i == (std::uint64_t(1) << n)) {
    epoch_ = n;
    open_epoch();
  }
  if (pass_) pass_->consume(s);
  if (i == (std::uint64_t(2) << n) - 1) {
    Epoch done{n, std::nullopt};
    if (pass_) done.v_hat = pass_->v_hat();
    completed_.push_back(std::move(done));
    pass_.reset();
  }
}

std::optional<int> DyadicEstimator::last_completed_epoch() const {
  if (completed_.empty()) return std::nullopt;
  return completed_.back().n;
}

double DyadicEstimator::epoch_estimate(int n, std::size_t k) const {
  for (const auto& e : completed_) {
    if (e.n == n) {
      if (!e.v_hat) throw NumericError("epoch has no variance estimate");
      return e.v_hat->at(k);
    }
  }
  throw ContractError("epoch not completed");
}

double DyadicEstimator::estimate(std::size_t k) const {
  if (consumed_ < 4) throw ContractError("dyadic estimate requires t >= 4");
  const int m = std::bit_width(consumed_) - 2;
  const std::uint64_t two_m = std::uint64_t(1) << m;
  return dyadic_extrapolate(epoch_estimate(m, k), two_m, consumed_,
                            schedule_.alpha());
}

}  // namespace sgdinf
