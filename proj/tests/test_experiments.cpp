#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "sgdinf/experiments.hpp"
#include "sgdinf/inference.hpp"

using namespace sgdinf;

TEST_SUITE("experiments") {

TEST_CASE("ks distance examples") {
  CHECK(ks_distance(std::vector<double>(10, 0.0)) == 0.5);
  const int n = 200;
  std::vector<double> grid;
  for (int i = 1; i <= n; ++i) grid.push_back(normal_quantile((i - 0.5) / n));
  CHECK(ks_distance(grid) == doctest::Approx(0.5 / n).epsilon(1e-9));
  CHECK_THROWS_AS(ks_distance(std::vector<double>{1.0}), ContractError);
  CHECK_THROWS_AS(ks_distance(std::vector<double>{1.0, NAN}), ContractError);
  std::vector<double> u;
  for (int i = 1; i <= n; ++i) u.push_back((i - 0.5) / n);
  CHECK(ks_distance_uniform(u) == doctest::Approx(0.5 / n));
}

TEST_CASE("parallel map keeps index order") {
  const auto v = parallel_map(1000, 4, [](std::size_t i) { return i * i; });
  for (std::size_t i = 0; i < v.size(); ++i) REQUIRE(v[i] == i * i);
}

TEST_CASE("results do not depend on the worker count") {
  ExperimentBase base;
  base.eta = 2.0;
  base.seed = 5;
  base.functionals = {FunctionalSpec{}, FunctionalSpec{FunctionalSpec::Kind::normalized_ones}};
  const std::vector<GridPoint> grid{{2000, 3, 0.75}, {4000, 3, 0.75}};
  base.workers = 1;
  const auto a = run_relative_error_experiment(base, grid, 60);
  const auto c1 = run_coverage_experiment(base, grid[0], 40, 0.9);
  base.workers = 3;
  const auto b = run_relative_error_experiment(base, grid, 60);
  const auto c3 = run_coverage_experiment(base, grid[0], 40, 0.9);
  std::ostringstream sa, sb, ca, cb;
  write_relerr_csv(sa, a);
  write_relerr_csv(sb, b);
  write_coverage_csv(ca, c1);
  write_coverage_csv(cb, c3);
  CHECK(sa.str() == sb.str());
  CHECK(ca.str() == cb.str());
  CHECK(a[0].insufficient_replicates);
}

TEST_CASE("grid validation") {
  CHECK(validate(GridPoint{4, 2, 0.75}).size() == 1);
  CHECK(validate(GridPoint{100, 0, 0.45}).size() == 2);
  ExperimentBase base;
  base.seed = 1;
  const std::vector<GridPoint> bad{{4, 2, 0.75}};
  CHECK_THROWS_AS(run_ks_experiment(base, bad, 10, Standardization::estimated_v_hat),
                  ContractError);
}

TEST_CASE("zero noise: every interval is degenerate and covers") {
  ExperimentBase base;
  base.problem.noise = NoiseLaw::gaussian(0.0);
  base.seed = 2;
  base.functionals = {FunctionalSpec{}, FunctionalSpec{FunctionalSpec::Kind::coordinate, -1}};
  const auto rows = run_coverage_experiment(base, {1000, 4, 0.75}, 30, 0.95, false);
  for (const auto& r : rows) {
    CHECK(r.degenerate == 30);
    CHECK(r.empirical_coverage == 1.0);
  }
}

TEST_CASE("nominal 0.5 coverage (reduced scale)") {
  ExperimentBase base;
  base.eta = 2.0;
  base.seed = 8;
  const auto rows = run_coverage_experiment(base, {20000, 5, 0.75}, 2000, 0.5, false);
  CHECK(rows[0].empirical_coverage >= 0.46);
  CHECK(rows[0].empirical_coverage <= 0.54);
}

TEST_CASE("one replicate is flagged") {
  ExperimentBase base;
  base.seed = 1;
  const auto r = run_relative_error_experiment(base, std::vector{GridPoint{100, 2, 0.75}}, 1);
  CHECK(r[0].insufficient_replicates);
  CHECK(std::isnan(r[0].mean_abs_rel_err));
}

TEST_CASE("theoretical ratio is exactly 2^alpha") {
  ExperimentBase base;
  base.seed = 3;
  for (double alpha : {0.6, 0.75}) {
    const auto r = variance_ratio_check(base, {1000, 3, alpha}, 20);
    REQUIRE(r.theory_t);
    CHECK(*r.theory_t / *r.theory_2t == doctest::Approx(std::pow(2.0, alpha)).epsilon(1e-14));
  }
}

TEST_CASE("alpha = 0.6 variance ratio (reduced scale)") {
  ExperimentBase base;
  base.eta = 2.0;
  base.seed = 21;
  const auto r = variance_ratio_check(base, {20000, 5, 0.6}, 2000);
  CHECK(r.within_10pct);
}

TEST_CASE("ks with the Monte Carlo variance, d=5, t=1e4, 4000 reps") {
  ExperimentBase base;
  base.eta = 2.0;
  base.seed = 13;
  const std::vector<GridPoint> g{{10000, 5, 0.75}};
  const auto r = run_ks_experiment(base, g, 4000, Standardization::true_variance_mc);
  CHECK(r[0].ks < 0.08);
  CHECK(r[0].stderr_proxy == doctest::Approx(0.8 / std::sqrt(4000.0)));
}

TEST_CASE("csv schemas") {
  std::ostringstream ks, cov, rel, bench;
  write_ks_csv(ks, std::vector<KsReport>{{GridPoint{10, 2, 0.75}, 1.0, 5,
                                          Standardization::estimated_v_hat, 0.1234567891234, 0.2}},
               {"v1", "config {}"});
  CHECK(ks.str() ==
        "# v1\n# config {}\nt,d,alpha,eta,standardization,replicates,ks,stderr_proxy\n"
        "10,2,0.75,1,estimated_v_hat,5,0.123456789,0.2\n");
  write_coverage_csv(cov, std::vector<CoverageReport>{});
  CHECK(cov.str().rfind("method,t,d,level,replicates,coverage,binomial_halfwidth,mean_width", 0) == 0);
  write_relerr_csv(rel, std::vector<RelErrReport>{});
  CHECK(rel.str() == "t,d,replicates,mean_abs_rel_err\n");
  write_bench_csv(bench, std::vector<BenchRow>{{"sgd_online", "fused_pass", 8, 2, 1.5}});
  CHECK(bench.str() == "method,stage,t,d,wall_ms\nsgd_online,fused_pass,8,2,1.5\n");
  CHECK(format_g9(1.0 / 3.0) == "0.333333333");
}

}
