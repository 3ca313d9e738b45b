#include "sgdinf/core_model.hpp"

#include <cmath>
#include <sstream>

namespace sgdinf {

void validate_sample(const StreamSample& s, Eigen::Index dim) {
  if (s.x.size() != dim) {
    std::ostringstream msg;
    msg << "sample dimension " << s.x.size() << " does not match " << dim;
    throw ContractError(msg.str());
  }
  if (!s.x.allFinite() || !std::isfinite(s.y)) {
    throw ContractError("sample contains non-finite values");
  }
}

StepSchedule::StepSchedule(double eta, double alpha, int dim)
    : eta_(eta), alpha_(alpha), dim_(dim), root_dim_(std::sqrt(double(dim))) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw ContractError("eta must be positive");
  }
  if (!(alpha > 0.5 && alpha < 1.0)) {
    throw ContractError("alpha must lie in (0.5, 1)");
  }
  if (dim < 1) throw ContractError("dim must be at least 1");
}

double StepSchedule::step(std::uint64_t i) const {
  if (i == 0) throw ContractError("step index is 1-based");
  return eta_ / (root_dim_ * std::pow(double(i), alpha_));
}

NoiseLaw NoiseLaw::gaussian(double sigma) {
  if (!(sigma >= 0.0)) throw ContractError("gaussian sigma must be >= 0");
  return {NoiseFamily::gaussian, sigma, 0.0};
}

NoiseLaw NoiseLaw::student_t(double dof, double scale) {
  // Eight moments are needed for sigma = E[eps^8]^(1/8).
  if (!(dof > 8.0)) {
    throw ContractError("student_t degrees of freedom must exceed 8");
  }
  if (!(scale >= 0.0)) throw ContractError("student_t scale must be >= 0");
  return {NoiseFamily::student_t, scale, dof};
}

NoiseLaw NoiseLaw::rademacher(double scale) {
  if (!(scale >= 0.0)) throw ContractError("rademacher scale must be >= 0");
  return {NoiseFamily::rademacher_scaled, scale, 0.0};
}

double NoiseLaw::moment(int k) const {
  if (k < 0) throw ContractError("moment order must be >= 0");
  if (k % 2 == 1) return 0.0;
  const int half = k / 2;
  switch (family) {
    case NoiseFamily::gaussian: {
      double m = std::pow(scale, k);
      for (int j = 1; j <= half; ++j) m *= 2 * j - 1;
      return m;
    }
    case NoiseFamily::student_t: {
      if (!(dof > k)) throw ContractError("student_t moment does not exist");
      // eps = scale * sqrt((nu - 2) / nu) * T_nu, E[T^2k] = nu^k prod (2j-1)/(nu-2j).
      const double c2 = scale * scale * (dof - 2.0) / dof;
      double m = 1.0;
      for (int j = 1; j <= half; ++j) {
        m *= c2 * dof * (2 * j - 1) / (dof - 2 * j);
      }
      return m;
    }
    case NoiseFamily::rademacher_scaled:
      return std::pow(scale, k);
  }
  return 0.0;
}

std::string to_string(NoiseFamily family) {
  switch (family) {
    case NoiseFamily::gaussian:
      return "gaussian";
    case NoiseFamily::student_t:
      return "student_t";
    case NoiseFamily::rademacher_scaled:
      return "rademacher_scaled";
  }
  return "unknown";
}

NoiseFamily noise_family_from_string(const std::string& name) {
  if (name == "gaussian") return NoiseFamily::gaussian;
  if (name == "student_t") return NoiseFamily::student_t;
  if (name == "rademacher_scaled" || name == "rademacher") {
    return NoiseFamily::rademacher_scaled;
  }
  throw ContractError("unknown noise family: " + name);
}

ProblemSpec ProblemSpec::make(Matrix gram, Vector beta_star, NoiseLaw noise,
                              double misspecification) {
  const auto d = beta_star.size();
  if (d < 1) throw ContractError("beta_star must be non-empty");
  if (gram.rows() != d || gram.cols() != d) {
    throw ContractError("gram must be d x d with d = len(beta_star)");
  }
  if (!gram.allFinite() || !beta_star.allFinite()) {
    throw ContractError("gram and beta_star must be finite");
  }
  if ((gram - gram.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw ContractError("gram must be symmetric");
  }
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw ContractError("gram must be positive definite");
  }
  if (!std::isfinite(misspecification)) {
    throw ContractError("misspecification constant must be finite");
  }
  ProblemSpec spec;
  spec.gram_is_identity = gram.isIdentity(0.0);
  spec.gram = std::move(gram);
  spec.beta_star = std::move(beta_star);
  spec.noise = noise;
  spec.misspecification = misspecification;
  return spec;
}

Matrix identity_gram(int dim) { return Matrix::Identity(dim, dim); }

Matrix toeplitz_gram(int dim, double rho) {
  if (!(std::abs(rho) < 1.0)) throw ContractError("toeplitz rho must be in (-1, 1)");
  Matrix g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = std::pow(rho, std::abs(i - j));
  }
  return g;
}

Functional Functional::make(Vector a, std::string label, bool allow_zero) {
  if (a.size() < 1) throw ContractError("functional must be non-empty");
  if (!a.allFinite()) throw ContractError("functional must be finite");
  if (!allow_zero && a.norm() == 0.0) {
    throw ContractError("zero functional requires allow_zero");
  }
  return {std::move(a), std::move(label)};
}

Functional Functional::coordinate(int dim, int coord) {
  if (coord < 0 || coord >= dim) throw ContractError("coordinate out of range");
  return {Vector::Unit(dim, coord), "e" + std::to_string(coord)};
}

std::vector<std::string> validate(const RunConfig& config) {
  std::vector<std::string> errors;
  const int d = config.schedule.dim();
  if (config.t && *config.t < 4) errors.emplace_back("t must be at least 4");
  if (!(config.confidence_level > 0.0 && config.confidence_level < 1.0)) {
    errors.emplace_back("confidence_level must lie in (0, 1)");
  }
  if (!config.seed) errors.emplace_back("seed is required");
  if (config.functionals.empty()) {
    errors.emplace_back("at least one functional is required");
  }
  for (const auto& f : config.functionals) {
    if (f.a.size() != d) {
      errors.emplace_back("functional '" + f.label + "' has wrong dimension");
    } else if (!f.a.allFinite()) {
      errors.emplace_back("functional '" + f.label + "' is not finite");
    }
  }
  if (config.theta0_policy == ThetaInit::explicit_vector &&
      config.theta0_explicit.size() != d) {
    errors.emplace_back("explicit theta0 has wrong dimension");
  }
  const auto& bp = config.block_policy;
  if (!(bp.c0 > 0.0)) errors.emplace_back("block_policy.c0 must be positive");
  if (bp.min_blocks < 1) errors.emplace_back("block_policy.min_blocks must be >= 1");
  return errors;
}

Vector initial_theta(const RunConfig& config, const ProblemSpec& spec) {
  switch (config.theta0_policy) {
    case ThetaInit::zero:
      return Vector::Zero(spec.dim());
    case ThetaInit::beta_star:
      return spec.beta_star;
    case ThetaInit::explicit_vector:
      if (config.theta0_explicit.size() != spec.dim()) {
        throw ContractError("explicit theta0 has wrong dimension");
      }
      return config.theta0_explicit;
  }
  return Vector::Zero(spec.dim());
}

}  // namespace sgdinf
