#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "sgdinf/baseline_ols.hpp"
#include "sgdinf/datagen.hpp"
#include "sgdinf/experiments.hpp"
#include "sgdinf/inference.hpp"

using namespace sgdinf;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

double reference_cdf(double x) {
  const Big v = boost::math::erfc(-Big(x) / boost::multiprecision::sqrt(Big(2))) / 2;
  return v.convert_to<double>();
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("normal cdf against a 50-digit reference") {
  CHECK(normal_cdf(0.0) == 0.5);
  for (double x : {0.5, 1.0, 2.0, 3.0}) {
    CHECK(normal_cdf(-x) == doctest::Approx(1.0 - normal_cdf(x)).epsilon(1e-15));
  }
  CHECK(normal_cdf(1.959964) == doctest::Approx(0.975).epsilon(1e-7));
  double worst = 0.0;
  for (int i = -800; i <= 800; ++i) {
    const double x = i / 100.0;
    worst = std::max(worst, std::abs(normal_cdf(x) - reference_cdf(x)));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("normal quantile") {
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.9599639845400542).epsilon(1e-12));
  for (double p : {1e-300, 1e-10, 0.02425, 0.3, 0.97575, 1.0 - 1e-12}) {
    CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) <= 1e-9 * std::max(p, 1e-3));
  }
  for (int i = -500; i <= 500; ++i) {
    const double x = i / 100.0;
    CHECK(std::abs(normal_quantile(normal_cdf(x)) - x) <= 1e-8);
  }
  CHECK_THROWS_AS(normal_quantile(0.0), ContractError);
  CHECK_THROWS_AS(normal_quantile(1.0), ContractError);
}

TEST_CASE("confidence intervals") {
  const auto ci = confidence_interval(0.0, 1.0, 0.95, "x");
  CHECK(ci.hi() == doctest::Approx(1.959964).epsilon(1e-6));
  CHECK(ci.lo() == -ci.hi());
  CHECK(ci.functional_label == "x");
  CHECK_FALSE(ci.degenerate);
  const auto point = confidence_interval(2.5, 0.0, 0.95);
  CHECK(point.degenerate);
  CHECK(point.lo() == 2.5);
  CHECK(point.hi() == 2.5);
  CHECK(point.contains(2.5));
  CHECK(confidence_interval(0.0, 4.0, 0.5).half_width ==
        doctest::Approx(1.3489795003921635).epsilon(1e-12));
  CHECK_THROWS_AS(confidence_interval(0.0, -1.0, 0.95), ContractError);
  CHECK_THROWS_AS(confidence_interval(0.0, 1.0, 1.0), ContractError);

  const auto base = confidence_interval(1.0, 0.25, 0.9);
  const auto shifted = confidence_interval(4.0, 0.25, 0.9);
  CHECK(shifted.lo() == doctest::Approx(base.lo() + 3.0));
  const auto scaled = confidence_interval(3.0, 0.25 * 9.0, 0.9);
  CHECK(scaled.lo() == doctest::Approx(3.0 * base.lo()));
  CHECK(scaled.hi() == doctest::Approx(3.0 * base.hi()));
}

TEST_CASE("wald test") {
  const Vector theta = (Vector(3) << 0.0, 1.959964, -1.959964).finished();
  const auto zero = wald_test(theta, 0, 1.0);
  CHECK(zero.z == 0.0);
  CHECK(zero.p_value == 1.0);
  const auto w = wald_test(theta, 1, 1.0, 0.1);
  CHECK(w.p_value == doctest::Approx(0.05).epsilon(1e-6));
  REQUIRE(w.reject_at);
  CHECK(*w.reject_at == 0.1);
  CHECK_FALSE(wald_test(theta, 1, 1.0, 0.01).reject_at);
  CHECK(wald_test(theta, 2, 1.0).p_value == w.p_value);
  CHECK_THROWS_AS(wald_test(theta, 0, 0.0), ContractError);
  CHECK_THROWS_AS(wald_test(theta, 3, 1.0), ContractError);
}

TEST_CASE("mean CI width shrinks like t^(-alpha/2)") {
  ExperimentBase base;
  base.eta = 2.0;
  base.seed = 3;
  const double alpha = 0.75;
  const auto w1 = run_coverage_experiment(base, {10000, 3, alpha}, 500, 0.95, false);
  const auto w4 = run_coverage_experiment(base, {40000, 3, alpha}, 500, 0.95, false);
  const double ratio = w4[0].mean_width / w1[0].mean_width;
  CHECK(std::abs(ratio / std::pow(4.0, -alpha / 2.0) - 1.0) < 0.10);
}

}

TEST_SUITE("baseline_ols") {

TEST_CASE("tiny and noiseless fits") {
  OlsAccumulator one(1);
  one.add({Vector::Ones(1), 1.0});
  one.add({Vector::Ones(1), 1.0});
  CHECK(ols_fit(one)[0] == doctest::Approx(1.0));

  std::mt19937_64 gen(1);
  std::normal_distribution<double> n;
  const Vector beta = (Vector(4) << 1.0, -2.0, 0.5, 3.0).finished();
  OlsAccumulator acc(4);
  for (int i = 0; i < 4; ++i) {
    CHECK_THROWS_AS(OlsSolution{acc}, NumericError);
    Vector x(4);
    for (int j = 0; j < 4; ++j) x[j] = n(gen);
    acc.add({x, x.dot(beta)});
  }
  const OlsSolution fit(acc);
  CHECK((fit.beta() - beta).norm() < 1e-10);
  MeatAccumulator meat(fit.beta());
  std::mt19937_64 again(1);
  std::normal_distribution<double> n2;
  for (int i = 0; i < 4; ++i) {
    Vector x(4);
    for (int j = 0; j < 4; ++j) x[j] = n2(again);
    meat.add({x, x.dot(beta)});
  }
  CHECK(sandwich_variance(fit, meat, Functional::coordinate(4, 0)) < 1e-20);
}

TEST_CASE("singular gram") {
  OlsAccumulator acc(2);
  for (int i = 0; i < 10; ++i) acc.add({Vector::Ones(2) * double(i + 1), 1.0});
  CHECK_THROWS_AS(OlsSolution{acc}, NumericError);
}

TEST_CASE("merge equals sequential accumulation") {
  const auto spec = ProblemSpec::make(toeplitz_gram(3, 0.5), Vector::Ones(3), NoiseLaw::gaussian(1.0));
  StreamHandle h(spec, 4);
  OlsAccumulator all(3), left(3), right(3);
  for (int i = 0; i < 100; ++i) {
    const auto s = h.next_sample();
    all.add(s);
    (i < 37 ? left : right).add(s);
  }
  left.merge(right);
  CHECK(left.n() == 100);
  CHECK((left.gram() - all.gram()).norm() < 1e-12);
  CHECK(left.gram() == left.gram().transpose());
}

TEST_CASE("sampling law, d = 5, n = 1e5") {
  const int d = 5;
  const int n = 100000;
  const auto spec = ProblemSpec::make(toeplitz_gram(d, 0.5), Vector::LinSpaced(d, 1, -1),
                                      NoiseLaw::gaussian(1.0));
  OlsAccumulator acc(d);
  StreamHandle h(spec, 5);
  StreamSample s;
  for (int i = 0; i < n; ++i) {
    h.next_sample(s);
    acc.add(s);
  }
  const OlsSolution fit(acc);
  const Matrix inv = spec.gram.inverse();
  for (int j = 0; j < d; ++j) {
    CHECK(std::abs(fit.beta()[j] - spec.beta_star[j]) <= 4.0 * std::sqrt(inv(j, j) / n));
  }
  MeatAccumulator meat(fit.beta());
  auto again = h.rewound();
  for (int i = 0; i < n; ++i) {
    again.next_sample(s);
    meat.add(s);
  }
  const auto a = Functional::coordinate(d, 2);
  const double v = sandwich_variance(fit, meat, a);
  const auto a2 = Functional::make(2.0 * a.a, "2a");
  CHECK(sandwich_variance(fit, meat, a2) == doctest::Approx(4.0 * v).epsilon(1e-13));
  CHECK(v == doctest::Approx(inv(2, 2) / n).epsilon(0.10));
}

TEST_CASE("d = 1 homoskedastic sandwich") {
  const int n = 100000;
  const auto spec = ProblemSpec::make(Matrix::Constant(1, 1, 2.0), Vector::Ones(1),
                                      NoiseLaw::gaussian(1.5));
  OlsAccumulator acc(1);
  StreamHandle h(spec, 6);
  for (int i = 0; i < n; ++i) acc.add(h.next_sample());
  const OlsSolution fit(acc);
  MeatAccumulator meat(fit.beta());
  auto again = h.rewound();
  for (int i = 0; i < n; ++i) meat.add(again.next_sample());
  const auto a = Functional::make(Vector::Constant(1, 3.0), "3e0");
  CHECK(sandwich_variance(fit, meat, a) ==
        doctest::Approx(2.25 / (n * 2.0) * 9.0).epsilon(0.10));
}

}
