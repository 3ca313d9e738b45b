#include "sgdinf/sgd_engine.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

namespace sgdinf {

SgdState SgdState::start(Vector theta0, StepSchedule schedule,
                         std::optional<std::uint64_t> horizon) {
  if (theta0.size() != schedule.dim()) {
    throw ContractError("theta0 dimension does not match the schedule");
  }
  return SgdState{std::move(theta0), 0, std::nullopt, schedule, horizon};
}

std::uint64_t SgdState::halfway() const {
  if (!horizon) throw ContractError("halfway index requires a known horizon");
  return (*horizon + 1) / 2;
}

std::size_t SgdState::state_words() const {
  std::size_t words = std::size_t(theta.size()) + 1;
  if (theta_half) words += std::size_t(theta_half->size());
  return words;
}

void apply_step(SgdState& state, const StreamSample& s) {
  if (s.x.size() != state.theta.size()) {
    throw ContractError("sample dimension does not match the iterate");
  }
  const std::uint64_t i = ++state.iter;
  const double residual = s.y - s.x.dot(state.theta);
  state.theta.noalias() += (state.schedule.step(i) * residual) * s.x;
  if (state.horizon && i == state.halfway()) state.theta_half = state.theta;
}

SgdState sgd_step(SgdState state, const StreamSample& s) {
  apply_step(state, s);
  return state;
}

SgdState run_sgd(const RunConfig& config, StreamHandle& stream) {
  if (!config.t) throw ContractError("run_sgd requires a known horizon t");
  auto state = SgdState::start(initial_theta(config, stream.spec()),
                               config.schedule, config.t);
  StreamSample s;
  for (std::uint64_t i = 0; i < *config.t; ++i) {
    stream.next_sample(s);
    apply_step(state, s);
  }
  return state;
}

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'G', 'D', 'C', 'K', 'P', 'T', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes;
  for (int k = 0; k < 8; ++k) bytes[k] = char((v >> (8 * k)) & 0xFF);
  out.write(bytes.data(), 8);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), 8);
  if (!in) throw ContractError("truncated checkpoint");
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= std::uint64_t(bytes[k]) << (8 * k);
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, std::uint64_t(ckpt.theta.size()));
  put_u64(out, ckpt.iter);
  put_u64(out, ckpt.stream_position);
  for (Eigen::Index k = 0; k < ckpt.theta.size(); ++k) {
    put_u64(out, std::bit_cast<std::uint64_t>(ckpt.theta[k]));
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 8> magic;
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw ContractError("not a checkpoint file");
  const std::uint64_t dim = get_u64(in);
  if (dim == 0 || dim > (1u << 24)) throw ContractError("bad checkpoint dim");
  Checkpoint ckpt;
  ckpt.iter = get_u64(in);
  ckpt.stream_position = get_u64(in);
  ckpt.theta.resize(Eigen::Index(dim));
  for (std::uint64_t k = 0; k < dim; ++k) {
    ckpt.theta[Eigen::Index(k)] = std::bit_cast<double>(get_u64(in));
  }
  return ckpt;
}

}  // namespace sgdinf
