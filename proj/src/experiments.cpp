#include "sgdinf/experiments.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "sgdinf/inference.hpp"
#include "sgdinf/oracle.hpp"
#include "sgdinf/rng.hpp"
#include "sgdinf/variance_estimator.hpp"

namespace sgdinf {

std::uint64_t grid_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(base ^ mix64(index + 0x5851F42D4C957F2Dull));
}

ProblemSpec ProblemTemplate::build(int dim) const {
  if (dim < 1) throw ContractError("dim must be at least 1");
  Vector beta(dim);
  if (beta_star) {
    if (beta_star->size() != dim) throw ContractError("beta_star has wrong dimension");
    beta = *beta_star;
  } else {
    for (int j = 0; j < dim; ++j) beta[j] = 1.0 / (j + 1);
    if (dim > 1) beta[dim - 1] = 0.0;
  }
  Matrix g = gram == GramKind::identity ? identity_gram(dim) : toeplitz_gram(dim, rho);
  return ProblemSpec::make(std::move(g), std::move(beta), noise, misspecification);
}

Functional FunctionalSpec::build(int dim) const {
  switch (kind) {
    case Kind::normalized_ones:
      return Functional::make(Vector::Constant(dim, 1.0 / std::sqrt(double(dim))),
                              label.empty() ? "ones" : label);
    case Kind::explicit_vector:
      if (a.size() != dim) throw ContractError("functional has wrong dimension");
      return Functional::make(a, label.empty() ? "a" : label);
    case Kind::coordinate:
      break;
  }
  const int coord = index < 0 ? dim + index : index;
  auto f = Functional::coordinate(dim, coord);
  if (!label.empty()) f.label = label;
  return f;
}

std::vector<std::string> validate(const GridPoint& g) {
  std::vector<std::string> errors;
  if (g.t < 8) errors.emplace_back("t must be at least 8");
  if (g.dim < 1) errors.emplace_back("d must be at least 1");
  if (!(g.alpha > 0.5 && g.alpha < 1.0)) {
    errors.emplace_back("alpha must lie in (0.5, 1)");
  }
  return errors;
}

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
  return out;
}

std::vector<Vector> directions_of(const std::vector<Functional>& fs) {
  std::vector<Vector> out;
  out.reserve(fs.size());
  for (const auto& f : fs) out.push_back(f.a);
  return out;
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / double(x.size());
}

}  // namespace

ResolvedPoint resolve(const ExperimentBase& base, const GridPoint& g,
                      std::uint64_t grid_index) {
  if (auto errors = validate(g); !errors.empty()) throw ContractError(join(errors));
  if (base.functionals.empty()) throw ContractError("no functionals configured");
  // Rejects unusable block policies before any replicate runs.
  block_size(base.block_policy, g.t, g.dim, g.alpha);

  ProblemSpec problem = base.problem.build(g.dim);
  StepSchedule schedule(base.eta, g.alpha, g.dim);
  Vector theta0;
  switch (base.theta0_policy) {
    case ThetaInit::zero:
      theta0 = Vector::Zero(g.dim);
      break;
    case ThetaInit::beta_star:
      theta0 = problem.beta_star;
      break;
    case ThetaInit::explicit_vector:
      throw ContractError("experiments support theta0 = zero or beta_star");
  }

  std::vector<Functional> functionals;
  std::vector<double> truth, bias_values;
  for (const auto& spec : base.functionals) {
    functionals.push_back(spec.build(g.dim));
    truth.push_back(functionals.back().a.dot(problem.beta_star));
    bias_values.push_back(
        theta0 == problem.beta_star
            ? 0.0
            : bias(functionals.back(), problem.gram, theta0, problem.beta_star,
                   schedule, g.t)
                  .value);
  }

  std::optional<std::vector<double>> theory;
  if (!problem.misspecified()) {
    const auto eig = eigendecompose(problem.gram);
    const auto pq = population_quantities(problem);
    std::vector<double> values;
    for (const auto& f : functionals) {
      values.push_back(theoretical_variance(f, eig, pq.a_sigma, schedule, g.t));
    }
    theory = std::move(values);
  }

  auto generator = std::make_shared<const SampleGenerator>(problem);
  return ResolvedPoint{g,
                       std::move(problem),
                       std::move(generator),
                       schedule,
                       std::move(theta0),
                       std::move(functionals),
                       std::move(truth),
                       std::move(bias_values),
                       grid_seed(base.seed, grid_index),
                       std::move(theory)};
}

ReplicateOutcome run_replicate(const ExperimentBase& base,
                               const ResolvedPoint& point, std::uint32_t r,
                               OlsAccumulator* ols) {
  OnlinePass pass(point.grid.t, point.schedule, point.theta0,
                  directions_of(point.functionals), base.block_policy);
  StreamHandle stream(point.generator, point.seed, r);
  StreamSample s;
  for (std::uint64_t i = 0; i < point.grid.t; ++i) {
    stream.next_sample(s);
    pass.consume(s);
    if (ols) ols->add(s);
  }
  ReplicateOutcome out;
  for (const auto& f : point.functionals) {
    out.estimate.push_back(f.a.dot(pass.sgd().theta));
  }
  try {
    out.v_hat = pass.v_hat();
  } catch (const NumericError&) {
    out.failed = true;
    out.v_hat.assign(point.functionals.size(),
                     std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

double ks_distance(std::span<const double> z) {
  if (z.size() < 2) throw ContractError("ks_distance requires at least 2 values");
  std::vector<double> sorted(z.begin(), z.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw ContractError("ks_distance requires finite values");
  }
  std::sort(sorted.begin(), sorted.end());
  const double n = double(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf(sorted[i]);
    d = std::max({d, double(i + 1) / n - f, f - double(i) / n});
  }
  return d;
}

double ks_distance_uniform(std::span<const double> u) {
  if (u.size() < 2) throw ContractError("ks_distance requires at least 2 values");
  std::vector<double> sorted(u.begin(), u.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = double(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = std::clamp(sorted[i], 0.0, 1.0);
    d = std::max({d, double(i + 1) / n - f, f - double(i) / n});
  }
  return d;
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / double(x.size() - 1);
}

std::string to_string(Standardization s) {
  switch (s) {
    case Standardization::true_variance_mc:
      return "true_variance_mc";
    case Standardization::theoretical_variance:
      return "theoretical_variance";
    case Standardization::estimated_v_hat:
      return "estimated_v_hat";
  }
  return "unknown";
}

Standardization standardization_from_string(const std::string& name) {
  if (name == "true_variance_mc") return Standardization::true_variance_mc;
  if (name == "theoretical_variance") return Standardization::theoretical_variance;
  if (name == "estimated_v_hat") return Standardization::estimated_v_hat;
  throw ContractError("unknown standardization: " + name);
}

std::vector<KsReport> run_ks_experiment(const ExperimentBase& base,
                                        std::span<const GridPoint> grid,
                                        std::size_t replicates,
                                        Standardization standardization) {
  if (replicates < 2) throw ContractError("KS experiment needs >= 2 replicates");
  std::vector<KsReport> reports;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto point = resolve(base, grid[g], g);
    if (standardization == Standardization::theoretical_variance && !point.theory) {
      throw ContractError("theoretical variance unavailable for this noise model");
    }
    const auto outcomes = parallel_map(replicates, base.workers, [&](std::size_t r) {
      return run_replicate(base, point, std::uint32_t(r));
    });
    const double center = point.truth[0] + point.bias[0];
    std::vector<double> estimates;
    for (const auto& o : outcomes) estimates.push_back(o.estimate[0]);
    const double mc_var = sample_variance(estimates);

    KsReport rep{grid[g], base.eta, replicates, standardization};
    std::vector<double> z;
    for (const auto& o : outcomes) {
      double v = 0.0;
      switch (standardization) {
        case Standardization::true_variance_mc:
          v = mc_var;
          break;
        case Standardization::theoretical_variance:
          v = (*point.theory)[0];
          break;
        case Standardization::estimated_v_hat:
          v = o.v_hat[0];
          break;
      }
      if (o.failed || !(v > 0.0)) {
        ++rep.failures;
        continue;
      }
      z.push_back((o.estimate[0] - center) / std::sqrt(v));
    }
    rep.ks = z.size() >= 2 ? ks_distance(z) : 1.0;
    rep.stderr_proxy = 0.8 / std::sqrt(double(replicates));
    reports.push_back(rep);
  }
  return reports;
}

std::string to_string(CiMethod m) {
  return m == CiMethod::sgd_online ? "sgd_online" : "ols_sandwich";
}

namespace {

struct CoverageOutcome {
  ReplicateOutcome sgd;
  std::vector<double> ols_estimate;
  std::vector<double> ols_variance;
  bool ols_failed = false;
};

}  // namespace

std::vector<CoverageReport> run_coverage_experiment(const ExperimentBase& base,
                                                    const GridPoint& grid,
                                                    std::size_t replicates,
                                                    double level, bool with_ols) {
  if (!(level > 0.0 && level < 1.0)) throw ContractError("level must lie in (0, 1)");
  if (replicates < 1) throw ContractError("coverage needs >= 1 replicate");
  const auto point = resolve(base, grid, 0);
  const std::size_t m = point.functionals.size();

  const auto outcomes = parallel_map(replicates, base.workers, [&](std::size_t r) {
    CoverageOutcome out;
    std::optional<OlsAccumulator> acc;
    if (with_ols) acc.emplace(grid.dim);
    out.sgd = run_replicate(base, point, std::uint32_t(r), acc ? &*acc : nullptr);
    if (!with_ols) return out;
    try {
      const OlsSolution fit(*acc);
      MeatAccumulator meat(fit.beta());
      StreamHandle again(point.generator, point.seed, std::uint32_t(r));
      StreamSample s;
      for (std::uint64_t i = 0; i < grid.t; ++i) {
        again.next_sample(s);
        meat.add(s);
      }
      for (const auto& f : point.functionals) {
        out.ols_estimate.push_back(f.a.dot(fit.beta()));
        out.ols_variance.push_back(sandwich_variance(fit, meat, f));
      }
    } catch (const NumericError&) {
      out.ols_failed = true;
    }
    return out;
  });

  std::vector<CoverageReport> reports;
  const std::vector<CiMethod> methods =
      with_ols ? std::vector<CiMethod>{CiMethod::sgd_online, CiMethod::ols_sandwich}
               : std::vector<CiMethod>{CiMethod::sgd_online};
  for (CiMethod method : methods) {
    for (std::size_t k = 0; k < m; ++k) {
      CoverageReport rep;
      rep.method = method;
      rep.grid = grid;
      rep.functional = point.functionals[k].label;
      rep.level = level;
      std::size_t covered = 0, used = 0;
      double width = 0.0;
      std::vector<double> pvalues;
      for (const auto& o : outcomes) {
        double est, var;
        if (method == CiMethod::sgd_online) {
          if (o.sgd.failed) {
            ++rep.failures;
            continue;
          }
          est = o.sgd.estimate[k];
          var = o.sgd.v_hat[k];
        } else {
          if (o.ols_failed) {
            ++rep.failures;
            continue;
          }
          est = o.ols_estimate[k];
          var = o.ols_variance[k];
        }
        const auto ci = confidence_interval(est, var, level);
        ++used;
        if (ci.degenerate) ++rep.degenerate;
        if (ci.contains(point.truth[k])) ++covered;
        width += 2.0 * ci.half_width;
        if (point.truth[k] == 0.0 && var > 0.0) {
          pvalues.push_back(wald_test(Vector::Constant(1, est), 0, var).p_value);
        }
      }
      rep.replicates = used;
      if (used > 0) {
        rep.empirical_coverage = double(covered) / double(used);
        rep.mean_width = width / double(used);
        const double c = rep.empirical_coverage;
        rep.binomial_halfwidth = 1.96 * std::sqrt(c * (1.0 - c) / double(used));
      }
      if (pvalues.size() >= 2) rep.wald_uniform_ks = ks_distance_uniform(pvalues);
      reports.push_back(rep);
    }
  }
  return reports;
}

std::vector<RelErrReport> run_relative_error_experiment(
    const ExperimentBase& base, std::span<const GridPoint> grid,
    std::size_t replicates) {
  std::vector<RelErrReport> reports;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    RelErrReport rep;
    rep.grid = grid[g];
    rep.replicates = replicates;
    rep.insufficient_replicates = replicates < 100;
    const auto point = resolve(base, grid[g], g);
    const auto outcomes = parallel_map(replicates, base.workers, [&](std::size_t r) {
      return run_replicate(base, point, std::uint32_t(r));
    });
    std::vector<double> estimates, v_hats, z;
    const double center = point.truth[0] + point.bias[0];
    for (const auto& o : outcomes) {
      estimates.push_back(o.estimate[0]);
      if (o.failed) {
        ++rep.failures;
        continue;
      }
      v_hats.push_back(o.v_hat[0]);
      if (o.v_hat[0] > 0.0) z.push_back((o.estimate[0] - center) / std::sqrt(o.v_hat[0]));
    }
    rep.mc_variance = sample_variance(estimates);
    if (point.theory) rep.theory = (*point.theory)[0];
    if (replicates >= 2) rep.mc_variance_rel_se = std::sqrt(2.0 / double(replicates - 1));
    if (!v_hats.empty()) rep.mean_v_hat = mean_of(v_hats);
    if (!v_hats.empty() && std::isfinite(rep.mc_variance) && rep.mc_variance > 0.0) {
      std::vector<double> err;
      for (double v : v_hats) err.push_back(std::abs(v / rep.mc_variance - 1.0));
      rep.mean_abs_rel_err = mean_of(err);
      rep.rel_err_se = err.size() >= 2
                           ? std::sqrt(sample_variance(err) / double(err.size()))
                           : 0.0;
    }
    if (rep.theory && !v_hats.empty()) {
      std::vector<double> err;
      for (double v : v_hats) err.push_back(std::abs(v / *rep.theory - 1.0));
      rep.mean_abs_rel_err_theory = mean_of(err);
    }
    if (z.size() >= 2) rep.ks_v_hat = ks_distance(z);
    reports.push_back(rep);
  }
  return reports;
}

namespace {

std::vector<double> mc_estimates(const ExperimentBase& base,
                                 const ResolvedPoint& point,
                                 std::size_t replicates) {
  return parallel_map(replicates, base.workers, [&](std::size_t r) {
    auto state = SgdState::start(point.theta0, point.schedule, point.grid.t);
    StreamHandle stream(point.generator, point.seed, std::uint32_t(r));
    StreamSample s;
    for (std::uint64_t i = 0; i < point.grid.t; ++i) {
      stream.next_sample(s);
      apply_step(state, s);
    }
    return point.functionals[0].a.dot(state.theta) - point.truth[0] - point.bias[0];
  });
}

}  // namespace

VarianceRatioReport variance_ratio_check(const ExperimentBase& base,
                                         const GridPoint& grid,
                                         std::size_t replicates) {
  if (replicates < 2) throw ContractError("variance ratio needs >= 2 replicates");
  GridPoint doubled = grid;
  doubled.t = 2 * grid.t;
  const auto p1 = resolve(base, grid, 0);
  const auto p2 = resolve(base, doubled, 1);
  VarianceRatioReport rep;
  rep.grid = grid;
  rep.replicates = replicates;
  rep.var_t = sample_variance(mc_estimates(base, p1, replicates));
  rep.var_2t = sample_variance(mc_estimates(base, p2, replicates));
  rep.ratio = rep.var_t / rep.var_2t;
  rep.expected = std::pow(2.0, grid.alpha);
  rep.within_10pct = std::abs(rep.ratio / rep.expected - 1.0) <= 0.10;
  if (p1.theory && p2.theory) {
    rep.theory_t = (*p1.theory)[0];
    rep.theory_2t = (*p2.theory)[0];
    rep.mc_vs_theory_rel = std::abs(rep.var_t / *rep.theory_t - 1.0);
  }
  return rep;
}

DyadicReport run_dyadic_experiment(const ExperimentBase& base,
                                   const GridPoint& grid, std::size_t replicates) {
  if (grid.t < 8) throw ContractError("dyadic experiment needs t >= 8");
  const auto point = resolve(base, grid, 0);
  DyadicReport rep;
  rep.grid = grid;
  rep.replicates = replicates;
  rep.epoch_m = std::bit_width(grid.t) - 2;

  struct Pair {
    double known = 0.0;
    double dyadic = 0.0;
    bool failed = false;
  };
  const auto pairs = parallel_map(replicates, base.workers, [&](std::size_t r) {
    OnlinePass known(grid.t, point.schedule, point.theta0,
                     directions_of(point.functionals), base.block_policy);
    DyadicEstimator dyadic(point.schedule, point.theta0,
                           directions_of(point.functionals), base.block_policy);
    StreamHandle stream(point.generator, point.seed, std::uint32_t(r));
    StreamSample s;
    for (std::uint64_t i = 0; i < grid.t; ++i) {
      stream.next_sample(s);
      known.consume(s);
      dyadic.update(s);
    }
    Pair p;
    try {
      p.known = known.v_hat()[0];
      p.dyadic = dyadic.estimate(0);
    } catch (const std::exception&) {
      p.failed = true;
    }
    return p;
  });
  std::vector<double> known, dyadic;
  for (const auto& p : pairs) {
    if (p.failed) {
      ++rep.failures;
      continue;
    }
    known.push_back(p.known);
    dyadic.push_back(p.dyadic);
  }
  if (!known.empty()) {
    rep.mean_known_t = mean_of(known);
    rep.mean_dyadic = mean_of(dyadic);
    rep.rel_diff = std::abs(rep.mean_dyadic / rep.mean_known_t - 1.0);
  }
  return rep;
}

std::vector<BenchRow> run_scaling_bench(std::span<const std::uint64_t> t_grid,
                                        std::span<const int> d_grid,
                                        const BenchOptions& opts) {
  using Clock = std::chrono::steady_clock;
  auto ms_since = [](Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  };

  // Samples are cycled from a cache-sized pool: a streaming pass sees each
  // sample once, right after it is drawn, and never reads a stored data set.
  // At least 2d samples so the OLS Gram matrix of the pool has full rank.
  struct Pool {
    Matrix xs;
    Vector ys;
    std::vector<Vector> directions;
  };
  std::vector<Pool> pools;
  ProblemTemplate recipe;
  for (int d : d_grid) {
    const std::uint64_t n = std::max<std::uint64_t>(
        2 * std::uint64_t(d), opts.pool_bytes / (sizeof(double) * std::uint64_t(d)));
    Pool p{Matrix(d, Eigen::Index(n)), Vector(Eigen::Index(n)), {}};
    StreamHandle stream(recipe.build(d), opts.seed);
    StreamSample s;
    for (Eigen::Index i = 0; i < Eigen::Index(n); ++i) {
      stream.next_sample(s);
      p.xs.col(i) = s.x;
      p.ys[i] = s.y;
    }
    for (int k = 0; k < opts.functionals; ++k) p.directions.push_back(Vector::Unit(d, k % d));
    pools.push_back(std::move(p));
  }

  struct Cell {
    double sgd = std::numeric_limits<double>::infinity();
    double accumulate = sgd;
    double solve = sgd;
  };
  std::vector<Cell> best(d_grid.size() * t_grid.size());

  // Rounds are interleaved across the grid so slow spells on a shared host
  // hit every cell alike; each cell keeps its minimum.
  for (int rep = 0; rep < opts.repeats; ++rep) {
    for (std::size_t a = 0; a < d_grid.size(); ++a) {
      const int d = d_grid[a];
      const Pool& p = pools[a];
      const std::uint64_t n = std::uint64_t(p.xs.cols());
      const StepSchedule schedule(opts.eta, opts.alpha, d);
      StreamSample s;
      s.x.resize(d);
      for (std::size_t b = 0; b < t_grid.size(); ++b) {
        const std::uint64_t t = t_grid[b];
        Cell& cell = best[a * t_grid.size() + b];
        if (opts.sgd) {
          const auto start = Clock::now();
          OnlinePass pass(t, schedule, Vector::Zero(d), p.directions, BlockPolicy{});
          for (std::uint64_t i = 0; i < t; ++i) {
            const Eigen::Index j = Eigen::Index(i % n);
            s.x = p.xs.col(j);
            s.y = p.ys[j];
            pass.consume(s);
          }
          volatile double sink = pass.v_hat()[0];
          (void)sink;
          cell.sgd = std::min(cell.sgd, ms_since(start));
        }
        if (opts.ols) {
          auto start = Clock::now();
          OlsAccumulator acc(d);
          for (std::uint64_t i = 0; i < t; ++i) {
            const Eigen::Index j = Eigen::Index(i % n);
            s.x = p.xs.col(j);
            s.y = p.ys[j];
            acc.add(s);
          }
          cell.accumulate = std::min(cell.accumulate, ms_since(start));
          start = Clock::now();
          const OlsSolution fit(acc);
          volatile double sink = fit.solve(p.directions[0]).sum() + fit.beta()[0];
          (void)sink;
          cell.solve = std::min(cell.solve, ms_since(start));
        }
      }
    }
  }

  std::vector<BenchRow> rows;
  for (std::size_t a = 0; a < d_grid.size(); ++a) {
    for (std::size_t b = 0; b < t_grid.size(); ++b) {
      const Cell& cell = best[a * t_grid.size() + b];
      const std::uint64_t t = t_grid[b];
      const int d = d_grid[a];
      if (opts.sgd) rows.push_back({"sgd_online", "fused_pass", t, d, cell.sgd});
      if (opts.ols) {
        rows.push_back({"ols_sandwich", "accumulate", t, d, cell.accumulate});
        rows.push_back({"ols_sandwich", "solve", t, d, cell.solve});
      }
    }
  }
  return rows;
}

std::string format_g9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace {

void write_preamble(std::ostream& out, const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) out << "# " << line << '\n';
}

}  // namespace

void write_ks_csv(std::ostream& out, std::span<const KsReport> rows,
                  const std::vector<std::string>& preamble) {
  write_preamble(out, preamble);
  out << "t,d,alpha,eta,standardization,replicates,ks,stderr_proxy\n";
  for (const auto& r : rows) {
    out << r.grid.t << ',' << r.grid.dim << ',' << format_g9(r.grid.alpha) << ','
        << format_g9(r.eta) << ',' << to_string(r.standardization) << ','
        << r.replicates << ',' << format_g9(r.ks) << ',' << format_g9(r.stderr_proxy)
        << '\n';
  }
}

void write_coverage_csv(std::ostream& out, std::span<const CoverageReport> rows,
                        const std::vector<std::string>& preamble) {
  write_preamble(out, preamble);
  // Trailing functional column: one row per (method, functional).
  out << "method,t,d,level,replicates,coverage,binomial_halfwidth,mean_width,functional\n";
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << r.grid.t << ',' << r.grid.dim << ','
        << format_g9(r.level) << ',' << r.replicates << ','
        << format_g9(r.empirical_coverage) << ',' << format_g9(r.binomial_halfwidth)
        << ',' << format_g9(r.mean_width) << ',' << r.functional << '\n';
  }
}

void write_relerr_csv(std::ostream& out, std::span<const RelErrReport> rows,
                      const std::vector<std::string>& preamble) {
  write_preamble(out, preamble);
  out << "t,d,replicates,mean_abs_rel_err\n";
  for (const auto& r : rows) {
    out << r.grid.t << ',' << r.grid.dim << ',' << r.replicates << ','
        << format_g9(r.mean_abs_rel_err) << '\n';
  }
}

void write_bench_csv(std::ostream& out, std::span<const BenchRow> rows,
                     const std::vector<std::string>& preamble) {
  write_preamble(out, preamble);
  out << "method,stage,t,d,wall_ms\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.stage << ',' << r.t << ',' << r.dim << ','
        << format_g9(r.wall_ms) << '\n';
  }
}

}  // namespace sgdinf
