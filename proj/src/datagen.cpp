#include "sgdinf/datagen.hpp"

#include <cmath>

#include "sgdinf/rng.hpp"

namespace sgdinf {

namespace {

double draw_noise(const NoiseLaw& law, SampleRng& rng) {
  switch (law.family) {
    case NoiseFamily::gaussian:
      return law.scale * rng.normal();
    case NoiseFamily::student_t: {
      const double z = rng.normal();
      const double chi2 = 2.0 * rng.gamma(0.5 * law.dof);
      const double t = z / std::sqrt(chi2 / law.dof);
      return law.scale * std::sqrt((law.dof - 2.0) / law.dof) * t;
    }
    case NoiseFamily::rademacher_scaled:
      return rng.coin() ? law.scale : -law.scale;
  }
  return 0.0;
}

}  // namespace

SampleGenerator::SampleGenerator(ProblemSpec spec) : spec_(std::move(spec)) {
  if (!spec_.gram_is_identity) {
    Eigen::LLT<Matrix> llt(spec_.gram);
    if (llt.info() != Eigen::Success) {
      throw ContractError("gram must be positive definite");
    }
    chol_lower_ = llt.matrixL();
  }
}

void SampleGenerator::draw(std::uint64_t seed, std::uint32_t replicate,
                           std::uint64_t index, StreamSample& out) const {
  const int d = dim();
  SampleRng rng(seed, replicate, index);
  out.x.resize(d);
  for (int k = 0; k < d; ++k) out.x[k] = rng.normal();
  if (!spec_.gram_is_identity) {
    out.x = chol_lower_.triangularView<Eigen::Lower>() * out.x;
  }
  double y = out.x.dot(spec_.beta_star) + draw_noise(spec_.noise, rng);
  if (spec_.misspecified()) {
    y += spec_.misspecification * (out.x[0] * out.x[0] - spec_.gram(0, 0));
  }
  out.y = y;
}

StreamHandle::StreamHandle(std::shared_ptr<const SampleGenerator> gen,
                           std::uint64_t seed, std::uint32_t replicate)
    : gen_(std::move(gen)), seed_(seed), replicate_(replicate) {}

StreamHandle::StreamHandle(const ProblemSpec& spec, std::uint64_t seed,
                           std::uint32_t replicate)
    : StreamHandle(std::make_shared<const SampleGenerator>(spec), seed,
                   replicate) {}

StreamSample StreamHandle::next_sample() {
  StreamSample s;
  next_sample(s);
  return s;
}

void StreamHandle::next_sample(StreamSample& out) {
  gen_->draw(seed_, replicate_, position_++, out);
}

StreamHandle StreamHandle::rewound() const {
  return StreamHandle(gen_, seed_, replicate_);
}

PopulationQuantities population_quantities(const ProblemSpec& spec) {
  if (spec.misspecified()) {
    throw ContractError(
        "population quantities have no closed form for misspecified streams");
  }
  const double second = spec.noise.moment(2);
  PopulationQuantities q;
  q.a_sigma = second * spec.gram;
  q.sigma = std::pow(spec.noise.moment(8), 1.0 / 8.0);
  q.sigma_min = std::sqrt(second);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(spec.gram, Eigen::EigenvaluesOnly);
  // E[Z^8] = 105 for a standard normal.
  q.lambda_bar = std::pow(105.0, 0.25) * eig.eigenvalues().maxCoeff();
  return q;
}

ProblemSpec with_diagnostics(const ProblemSpec& spec) {
  ProblemSpec out = spec;
  if (!spec.misspecified()) {
    const auto q = population_quantities(spec);
    out.noise_sigma = q.sigma;
    out.sigma_min = q.sigma_min;
    out.lambda_bar = q.lambda_bar;
  }
  return out;
}

}  // namespace sgdinf
