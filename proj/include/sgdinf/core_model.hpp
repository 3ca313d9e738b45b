#ifndef SGDINF_CORE_MODEL_HPP
#define SGDINF_CORE_MODEL_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sgdinf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown when an input violates a documented precondition.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation fails numerically (singular Gram, non-SPD input).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One observation (X_i, Y_i) of the stream.
struct StreamSample {
  Vector x;
  double y = 0.0;
};

/// Throws ContractError unless `s` has exactly `dim` finite covariates and a
/// finite response.
void validate_sample(const StreamSample& s, Eigen::Index dim);

/**
 * Step-size schedule eta_i = eta / (sqrt(d) * i^alpha).
 *
 * The sqrt(d) deflation ties the step to the ambient dimension; alpha in
 * (1/2, 1) keeps the sum of steps divergent while the sum of squared steps
 * converges.
 */
class StepSchedule {
 public:
  StepSchedule(double eta, double alpha, int dim);

  /// eta_i for a 1-based iteration index. Throws ContractError for i == 0.
  double step(std::uint64_t i) const;

  double eta() const { return eta_; }
  double alpha() const { return alpha_; }
  int dim() const { return dim_; }

 private:
  double eta_;
  double alpha_;
  int dim_;
  double root_dim_;
};

inline double step_size(const StepSchedule& schedule, std::uint64_t i) {
  return schedule.step(i);
}

enum class NoiseFamily { gaussian, student_t, rademacher_scaled };

/**
 * Law of the additive noise epsilon. All families have mean zero.
 *
 * `scale` is the standard deviation for gaussian and student_t (the t draw is
 * rescaled to unit variance first) and the magnitude for rademacher_scaled.
 */
struct NoiseLaw {
  NoiseFamily family = NoiseFamily::gaussian;
  double scale = 1.0;
  double dof = 33.0;

  static NoiseLaw gaussian(double sigma);
  static NoiseLaw student_t(double dof, double scale = 1.0);
  static NoiseLaw rademacher(double scale);

  /// E[eps^k] for even k >= 0; zero for odd k. Throws if the moment does not
  /// exist (student_t with dof <= k).
  double moment(int k) const;
  double variance() const { return moment(2); }
};

std::string to_string(NoiseFamily family);
NoiseFamily noise_family_from_string(const std::string& name);

/// Ground-truth data-generating model: X ~ N(0, gram), Y = <X, beta_star> + eps,
/// plus an optional quadratic misspecification c * (X_1^2 - gram_11).
struct ProblemSpec {
  Matrix gram;
  Vector beta_star;
  NoiseLaw noise;
  double misspecification = 0.0;
  bool gram_is_identity = false;

  // Diagnostics; populated by population_quantities when available.
  std::optional<double> noise_sigma;
  std::optional<double> sigma_min;
  std::optional<double> lambda_bar;

  int dim() const { return static_cast<int>(beta_star.size()); }
  bool misspecified() const { return misspecification != 0.0; }

  /// Validates symmetry (1e-10 absolute), positive definiteness and shapes.
  static ProblemSpec make(Matrix gram, Vector beta_star, NoiseLaw noise,
                          double misspecification = 0.0);
};

Matrix identity_gram(int dim);
/// Toeplitz Gram with entries rho^|i-j|; SPD for |rho| < 1.
Matrix toeplitz_gram(int dim, double rho);

struct Functional {
  Vector a;
  std::string label;

  static Functional make(Vector a, std::string label, bool allow_zero = false);
  /// Unit vector e_coord (0-based).
  static Functional coordinate(int dim, int coord);
};

enum class BlockMode { paper, capped };

struct BlockPolicy {
  BlockMode mode = BlockMode::capped;
  double c0 = 1.0;
  bool include_log_factor = false;
  int min_blocks = 4;
};

enum class ThetaInit { zero, beta_star, explicit_vector };

struct RunConfig {
  std::optional<std::uint64_t> t;  // empty: stream length unknown (dyadic mode)
  StepSchedule schedule{1.0, 0.75, 1};
  ThetaInit theta0_policy = ThetaInit::zero;
  Vector theta0_explicit;
  std::vector<Functional> functionals;
  BlockPolicy block_policy;
  double confidence_level = 0.95;
  std::optional<std::uint64_t> seed;
};

/// One message per violated RunConfig invariant; empty when valid.
std::vector<std::string> validate(const RunConfig& config);

/// Resolves the initial iterate for a run against `spec`.
Vector initial_theta(const RunConfig& config, const ProblemSpec& spec);

}  // namespace sgdinf

#endif  // SGDINF_CORE_MODEL_HPP
