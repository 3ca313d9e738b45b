#ifndef SGDINF_EXPERIMENTS_HPP
#define SGDINF_EXPERIMENTS_HPP

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sgdinf/baseline_ols.hpp"
#include "sgdinf/core_model.hpp"
#include "sgdinf/datagen.hpp"

namespace sgdinf {

/**
 * Runs f(0), ..., f(n-1) on `workers` threads and returns the results in
 * index order. Each call must depend only on its index, so the output is
 * identical for every worker count.
 */
template <class F>
auto parallel_map(std::size_t n, int workers, F&& f) {
  using R = decltype(f(std::size_t{}));
  std::vector<R> out(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) out[i] = f(i);
  };
  const int threads = workers < 1 ? 1 : workers;
  if (threads == 1 || n < 2) {
    work();
    return out;
  }
  std::vector<std::jthread> pool;
  for (int w = 0; w < threads; ++w) pool.emplace_back(work);
  pool.clear();
  return out;
}

/// Seed of grid point `index` derived from the experiment's base seed.
std::uint64_t grid_seed(std::uint64_t base, std::uint64_t index);

enum class GramKind { identity, toeplitz };

/// Recipe for a ProblemSpec at any dimension. Unless `beta_star` is given,
/// beta*_j = 1/(j+1) for j < d-1 and beta*_{d-1} = 0, so the last coordinate
/// is a Wald null.
struct ProblemTemplate {
  GramKind gram = GramKind::identity;
  double rho = 0.5;
  NoiseLaw noise = NoiseLaw::gaussian(1.0);
  double misspecification = 0.0;
  std::optional<Vector> beta_star;  // fixes the dimension when set

  ProblemSpec build(int dim) const;
};

/// Functional recipe: coordinate `index` (negative counts from the end),
/// the normalized all-ones direction, or an explicit vector.
struct FunctionalSpec {
  enum class Kind { coordinate, normalized_ones, explicit_vector } kind = Kind::coordinate;
  int index = 0;
  Vector a;
  std::string label;

  Functional build(int dim) const;
};

struct ExperimentBase {
  ProblemTemplate problem;
  double eta = 1.0;
  ThetaInit theta0_policy = ThetaInit::beta_star;
  std::vector<FunctionalSpec> functionals{FunctionalSpec{}};
  BlockPolicy block_policy;
  std::uint64_t seed = 0;
  int workers = 1;
};

struct GridPoint {
  std::uint64_t t = 0;
  int dim = 1;
  double alpha = 0.75;
};

/// Validation messages for a grid point (t >= 8, alpha in (1/2, 1), d >= 1).
std::vector<std::string> validate(const GridPoint& g);

/// Everything a replicate needs, resolved for one grid point.
struct ResolvedPoint {
  GridPoint grid;
  ProblemSpec problem;
  std::shared_ptr<const SampleGenerator> generator;
  StepSchedule schedule;
  Vector theta0;
  std::vector<Functional> functionals;
  std::vector<double> truth;  // <a_k, beta*>
  std::vector<double> bias;   // oracle bias of <a_k, theta_t>
  std::uint64_t seed = 0;

  /// Leading-order variance per functional; empty when the noise law gives
  /// no closed-form A_sigma (misspecified streams).
  std::optional<std::vector<double>> theory;
};

ResolvedPoint resolve(const ExperimentBase& base, const GridPoint& g,
                      std::uint64_t grid_index);

struct ReplicateOutcome {
  std::vector<double> estimate;  // <a_k, theta_t>
  std::vector<double> v_hat;     // NaN when the estimator failed
  bool failed = false;
};

/// One fused SGD + variance-estimator pass over replicate `r`. When `ols`
/// is given, the same samples are also accumulated into it.
ReplicateOutcome run_replicate(const ExperimentBase& base,
                               const ResolvedPoint& point, std::uint32_t r,
                               OlsAccumulator* ols = nullptr);

/// Kolmogorov distance of the empirical law of `z` to the standard normal:
/// max_i max(i/n - Phi(z_(i)), Phi(z_(i)) - (i-1)/n). Requires n >= 2 finite.
double ks_distance(std::span<const double> z);

/// Kolmogorov distance of `u` (values in [0, 1]) to Uniform(0, 1).
double ks_distance_uniform(std::span<const double> u);

/// Unbiased sample variance.
double sample_variance(std::span<const double> x);

enum class Standardization { true_variance_mc, theoretical_variance, estimated_v_hat };
std::string to_string(Standardization s);
Standardization standardization_from_string(const std::string& name);

struct KsReport {
  GridPoint grid;
  double eta = 0.0;
  std::size_t replicates = 0;
  Standardization standardization = Standardization::estimated_v_hat;
  double ks = 0.0;
  double stderr_proxy = 0.0;  // 0.8 / sqrt(replicates)
  std::size_t failures = 0;
};

/// Standardizes (<a, theta_t> - <a, beta*> - bias) by sqrt(V) for the first
/// functional, per grid point.
std::vector<KsReport> run_ks_experiment(const ExperimentBase& base,
                                        std::span<const GridPoint> grid,
                                        std::size_t replicates,
                                        Standardization standardization);

enum class CiMethod { sgd_online, ols_sandwich };
std::string to_string(CiMethod m);

struct CoverageReport {
  CiMethod method = CiMethod::sgd_online;
  GridPoint grid;
  std::string functional;
  double level = 0.95;
  std::size_t replicates = 0;
  double empirical_coverage = 0.0;
  double binomial_halfwidth = 0.0;  // 1.96 * sqrt(c (1 - c) / n)
  double mean_width = 0.0;
  std::size_t failures = 0;
  std::size_t degenerate = 0;
  /// For functionals whose truth is zero: KS distance of Wald p-values to
  /// Uniform(0, 1).
  std::optional<double> wald_uniform_ks;
};

/// Coverage of <a_k, beta*> per functional for the online CI and, when
/// `with_ols`, the OLS sandwich CI built on identical streams.
std::vector<CoverageReport> run_coverage_experiment(const ExperimentBase& base,
                                                    const GridPoint& grid,
                                                    std::size_t replicates,
                                                    double level,
                                                    bool with_ols = true);

struct RelErrReport {
  GridPoint grid;
  std::size_t replicates = 0;
  double mc_variance = 0.0;
  double mc_variance_rel_se = 0.0;  // sqrt(2 / (R - 1))
  double mean_abs_rel_err = std::numeric_limits<double>::quiet_NaN();
  double rel_err_se = 0.0;          // sd of |V/Var - 1| over sqrt(R)
  double mean_v_hat = 0.0;
  std::optional<double> theory;
  std::optional<double> mean_abs_rel_err_theory;
  double ks_v_hat = std::numeric_limits<double>::quiet_NaN();
  bool insufficient_replicates = false;  // fewer than 100
  std::size_t failures = 0;
};

std::vector<RelErrReport> run_relative_error_experiment(
    const ExperimentBase& base, std::span<const GridPoint> grid,
    std::size_t replicates);

struct VarianceRatioReport {
  GridPoint grid;
  std::size_t replicates = 0;
  double var_t = 0.0;
  double var_2t = 0.0;
  double ratio = 0.0;
  double expected = 0.0;  // 2^alpha
  bool within_10pct = false;
  std::optional<double> theory_t;
  std::optional<double> theory_2t;
  std::optional<double> mc_vs_theory_rel;  // |var_t / theory_t - 1|
};

VarianceRatioReport variance_ratio_check(const ExperimentBase& base,
                                         const GridPoint& grid,
                                         std::size_t replicates);

struct DyadicReport {
  GridPoint grid;
  std::size_t replicates = 0;
  int epoch_m = 0;
  double mean_known_t = 0.0;
  double mean_dyadic = 0.0;
  double rel_diff = 0.0;  // |mean_dyadic / mean_known_t - 1|
  std::size_t failures = 0;
};

/// Known-t and dyadic estimators fed from the same streams.
DyadicReport run_dyadic_experiment(const ExperimentBase& base,
                                   const GridPoint& grid,
                                   std::size_t replicates);

struct BenchRow {
  std::string method;
  std::string stage;
  std::uint64_t t = 0;
  int dim = 0;
  double wall_ms = 0.0;
};

struct BenchOptions {
  double alpha = 0.75;
  double eta = 1.0;
  int functionals = 1;
  int repeats = 5;
  bool sgd = true;
  bool ols = true;
  std::uint64_t seed = 1;
  std::size_t pool_bytes = std::size_t(1) << 20;  // cycled sample pool
};

/// Wall time (minimum over interleaved rounds) of the fused pass and of the OLS
/// accumulate and solve stages. Samples are drawn once into a pool of about
/// `pool_bytes` (at least 2d samples) and cycled, so generation and DRAM traffic are not timed.
std::vector<BenchRow> run_scaling_bench(std::span<const std::uint64_t> t_grid,
                                        std::span<const int> d_grid,
                                        const BenchOptions& opts);

// CSV emitters. Floats use 9 significant digits; `preamble` lines are
// written first as '# ' comments.
void write_ks_csv(std::ostream& out, std::span<const KsReport> rows,
                  const std::vector<std::string>& preamble = {});
void write_coverage_csv(std::ostream& out, std::span<const CoverageReport> rows,
                        const std::vector<std::string>& preamble = {});
void write_relerr_csv(std::ostream& out, std::span<const RelErrReport> rows,
                      const std::vector<std::string>& preamble = {});
void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows,
                     const std::vector<std::string>& preamble = {});

std::string format_g9(double v);

}  // namespace sgdinf

#endif  // SGDINF_EXPERIMENTS_HPP
