#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "sgdinf/datagen.hpp"
#include "sgdinf/oracle.hpp"
#include "sgdinf/sgd_engine.hpp"

using namespace sgdinf;

namespace {

std::vector<StreamSample> draw(const ProblemSpec& spec, std::uint64_t seed, int t) {
  StreamHandle h(spec, seed);
  std::vector<StreamSample> out;
  for (int i = 0; i < t; ++i) out.push_back(h.next_sample());
  return out;
}

Vector forward(const std::vector<StreamSample>& xs, Vector theta, const StepSchedule& sch) {
  auto st = SgdState::start(std::move(theta), sch);
  for (const auto& s : xs) apply_step(st, s);
  return st.theta;
}

Matrix random_spd(int d, std::mt19937_64& gen) {
  std::normal_distribution<double> n;
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = n(gen);
  return m * m.transpose() + 0.1 * Matrix::Identity(d, d);
}

}  // namespace

TEST_SUITE("sgd_engine") {

TEST_CASE("single update examples") {
  // eta_1 = 1 / sqrt(4) = 0.5.
  SgdState st = SgdState::start(Vector::Zero(4), StepSchedule(1.0, 0.75, 4));
  apply_step(st, {Vector::Unit(4, 0), 1.0});
  CHECK(st.theta == Vector::Unit(4, 0) * 0.5);

  const Vector theta = (Vector(3) << 0.3, -1.0, 2.0).finished();
  const Vector x = (Vector(3) << 1.0, 0.5, -0.25).finished();
  auto fixed = sgd_step(SgdState::start(theta, StepSchedule(1.0, 0.75, 3)), {x, x.dot(theta)});
  CHECK(fixed.theta == theta);

  // d = 1, eta_i = 0.1: pick eta with 0.1 = eta / 1^alpha.
  auto one = sgd_step(SgdState::start(Vector::Ones(1), StepSchedule(0.1, 0.75, 1)),
                      {Vector::Constant(1, 2.0), 0.0});
  CHECK(one.theta[0] == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("halfway snapshot") {
  const auto spec = ProblemSpec::make(identity_gram(2), Vector::Ones(2), NoiseLaw::gaussian(1.0));
  const auto xs = draw(spec, 1, 11);
  auto st = SgdState::start(Vector::Zero(2), StepSchedule(1.0, 0.75, 2), 11);
  CHECK(st.halfway() == 6);
  Vector at6;
  for (const auto& s : xs) {
    apply_step(st, s);
    if (st.iter == 6) at6 = st.theta;
  }
  REQUIRE(st.theta_half);
  CHECK(*st.theta_half == at6);
  CHECK(st.state_words() == 2 + 2 + 1);
}

TEST_CASE("t=50, d=3 matches the product form") {
  const auto spec = ProblemSpec::make(toeplitz_gram(3, 0.3), Vector::Ones(3), NoiseLaw::gaussian(1.0));
  const auto xs = draw(spec, 5, 50);
  const StepSchedule sch(1.0, 0.75, 3);
  const Vector theta0 = Vector::Constant(3, -0.5);
  const Vector a = forward(xs, theta0, sch);
  const Vector b = product_form_iterate(xs, theta0, sch);
  CHECK((a - b).norm() <= 1e-10 * b.norm());
}

TEST_CASE("rotation equivariance") {
  std::mt19937_64 gen(3);
  const int d = 4;
  const Eigen::HouseholderQR<Matrix> qr(random_spd(d, gen));
  const Matrix q = qr.householderQ();
  const auto spec = ProblemSpec::make(identity_gram(d), Vector::Ones(d), NoiseLaw::gaussian(1.0));
  auto xs = draw(spec, 9, 200);
  const StepSchedule sch(1.0, 0.7, d);
  const Vector theta0 = Vector::LinSpaced(d, -1, 1);
  const Vector base = forward(xs, theta0, sch);
  for (auto& s : xs) s.x = q * s.x;
  const Vector rotated = forward(xs, q * theta0, sch);
  CHECK((rotated - q * base).norm() < 1e-12 * base.norm());
}

TEST_CASE("run_sgd consumes exactly t samples") {
  const auto spec = ProblemSpec::make(identity_gram(2), Vector::Ones(2), NoiseLaw::gaussian(1.0));
  RunConfig cfg;
  cfg.t = 100;
  cfg.schedule = StepSchedule(1.0, 0.75, 2);
  StreamHandle h(spec, 4);
  const auto st = run_sgd(cfg, h);
  CHECK(st.iter == 100);
  CHECK(h.position() == 100);
  CHECK(st.theta == forward(draw(spec, 4, 100), Vector::Zero(2), cfg.schedule));
}

TEST_CASE("checkpoint round trip and resume") {
  const auto spec = ProblemSpec::make(identity_gram(3), Vector::Ones(3), NoiseLaw::gaussian(1.0));
  const StepSchedule sch(1.0, 0.75, 3);
  StreamHandle h(spec, 8);
  auto st = SgdState::start(Vector::Zero(3), sch);
  for (int i = 0; i < 500; ++i) apply_step(st, h.next_sample());

  std::stringstream buf;
  write_checkpoint(buf, {st.theta, st.iter, h.position()});
  CHECK(buf.str().size() == 32 + 3 * 8);
  CHECK(buf.str().substr(0, 8) == "SGDCKPT1");
  const auto ck = read_checkpoint(buf);
  CHECK(ck.theta == st.theta);
  CHECK(ck.iter == 500);
  CHECK(ck.stream_position == 500);

  for (int i = 0; i < 500; ++i) apply_step(st, h.next_sample());
  auto resumed = SgdState::start(ck.theta, sch);
  resumed.iter = ck.iter;
  StreamHandle h2(spec, 8);
  h2.seek(ck.stream_position);
  for (int i = 0; i < 500; ++i) apply_step(resumed, h2.next_sample());
  CHECK(resumed.theta == st.theta);

  std::stringstream bad("NOTACKPT");
  CHECK_THROWS(read_checkpoint(bad));
}

}

TEST_SUITE("oracle") {

TEST_CASE("jacobi eigendecomposition") {
  const auto e3 = eigendecompose(Matrix::Identity(3, 3));
  CHECK(e3.eigvals.isApprox(Vector::Ones(3)));
  Matrix d2 = Matrix::Zero(2, 2);
  d2(0, 0) = 1.0;
  d2(1, 1) = 4.0;
  const auto e2 = eigendecompose(d2);
  CHECK(e2.eigvals[0] == doctest::Approx(4.0));
  CHECK(e2.eigvals[1] == doctest::Approx(1.0));
  CHECK(std::abs(e2.eigvecs(1, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(e2.eigvecs(0, 1)) == doctest::Approx(1.0));

  std::mt19937_64 gen(1);
  for (int d : {2, 5, 9}) {
    const Matrix a = random_spd(d, gen);
    const auto e = eigendecompose(a);
    const Matrix rebuilt = e.eigvecs * e.eigvals.asDiagonal() * e.eigvecs.transpose();
    CHECK((rebuilt - a).norm() < 1e-12 * a.norm());
    CHECK((e.eigvecs.transpose() * e.eigvecs - Matrix::Identity(d, d)).norm() < 1e-12);
    for (int k = 1; k < d; ++k) CHECK(e.eigvals[k - 1] >= e.eigvals[k]);
  }
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(eigendecompose(asym), ContractError);
  CHECK_THROWS_AS(eigendecompose(-Matrix::Identity(2, 2)), ContractError);
}

TEST_CASE("product form: t=1, zero design, random small instance") {
  const StepSchedule sch(1.0, 0.75, 2);
  const Vector theta0 = (Vector(2) << 0.5, -0.5).finished();
  const StreamSample s{(Vector(2) << 1.0, 2.0).finished(), 0.7};
  const double eta = sch.step(1);
  const Vector expect = (Matrix::Identity(2, 2) - eta * s.x * s.x.transpose()) * theta0 + eta * s.x * s.y;
  CHECK(product_form_iterate(std::vector{s}, theta0, sch).isApprox(expect, 1e-15));

  const std::vector<StreamSample> zeros(7, StreamSample{Vector::Zero(2), 3.0});
  CHECK(product_form_iterate(zeros, theta0, sch) == theta0);

  const auto spec = ProblemSpec::make(identity_gram(2), Vector::Ones(2), NoiseLaw::gaussian(1.0));
  const auto xs = draw(spec, 77, 5);
  const Vector a = product_form_iterate(xs, theta0, sch);
  CHECK((a - forward(xs, theta0, sch)).norm() < 1e-12 * a.norm());
}

TEST_CASE("bias examples") {
  const Vector beta = Vector::Ones(2);
  const StepSchedule sch(1.0, 0.6, 2);
  const auto e1 = Functional::coordinate(2, 0);
  CHECK(bias(e1, identity_gram(2), beta, beta, sch, 10).value == 0.0);

  // Annihilating first factor for d = 1, A = 1, eta = 1.
  const auto b1 = bias(Functional::coordinate(1, 0), identity_gram(1), Vector::Zero(1),
                       Vector::Ones(1), StepSchedule(1.0, 0.75, 1), 5);
  CHECK(b1.value == 0.0);
  CHECK_FALSE(b1.reliable);

  double prod = 1.0;
  for (int i = 1; i <= 10; ++i) prod *= 1.0 - std::pow(i, -0.6) / std::sqrt(2.0);
  const Vector theta0 = beta + Vector::Unit(2, 0);
  const auto b = bias(e1, identity_gram(2), theta0, beta, sch, 10);
  CHECK(b.value == doctest::Approx(prod).epsilon(1e-14));
  CHECK(b.value == doctest::Approx(0.01576386169850902).epsilon(1e-12));
  CHECK(b.reliable);
}

TEST_CASE("theoretical variance") {
  const StepSchedule sch(1.5, 0.7, 4);
  const auto eig_i = eigendecompose(identity_gram(4));
  const auto a = Functional::make((Vector(4) << 1, 2, 0, -1).finished(), "a");
  const double expect = 1.5 / 2.0 * std::pow(1000.0, -0.7) * 9.0 * 6.0 / 2.0;
  CHECK(theoretical_variance(a, eig_i, 9.0 * identity_gram(4), sch, 1000) ==
        doctest::Approx(expect).epsilon(1e-14));
  CHECK(theoretical_variance(Functional::make(Vector::Zero(4), "0", true), eig_i,
                             identity_gram(4), sch, 1000) == 0.0);
  CHECK(theoretical_variance(a, eig_i, identity_gram(4), sch, 2000) * std::pow(2.0, 0.7) ==
        doctest::Approx(theoretical_variance(a, eig_i, identity_gram(4), sch, 1000)).epsilon(1e-14));

  // Independent double loop using Eigen's solver.
  std::mt19937_64 gen(4);
  const Matrix spd = random_spd(4, gen);
  Eigen::SelfAdjointEigenSolver<Matrix> es(spd);
  const Vector ak = es.eigenvectors().transpose() * a.a;
  const Matrix s = es.eigenvectors().transpose() * spd * es.eigenvectors();
  double sum = 0.0;
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) sum += ak[k] * ak[l] * s(k, l) / (es.eigenvalues()[k] + es.eigenvalues()[l]);
  const double ref = 1.5 / 2.0 * std::pow(1000.0, -0.7) * sum;
  CHECK(std::abs(theoretical_variance(a, eigendecompose(spd), spd, sch, 1000) - ref) <= 1e-12 * ref);
}

TEST_CASE("martingale terms") {
  const auto spec = ProblemSpec::make(toeplitz_gram(2, 0.2), Vector::Ones(2), NoiseLaw::gaussian(0.0));
  const StepSchedule sch(1.0, 0.75, 2);
  const auto a = Functional::coordinate(2, 1);
  const auto xs = draw(spec, 3, 20);
  for (double m : martingale_terms(xs, a, spec, spec.beta_star, sch)) CHECK(m == 0.0);

  const auto noisy = ProblemSpec::make(toeplitz_gram(2, 0.2), Vector::Ones(2), NoiseLaw::gaussian(1.0));
  const auto one = draw(noisy, 4, 1);
  const Vector theta0 = Vector::Zero(2);
  const double eta = sch.step(1);
  const double eps = one[0].y - one[0].x.dot(noisy.beta_star);
  const Vector v = noisy.beta_star - theta0;
  const double expect = a.a.dot(eta * ((one[0].x * one[0].x.transpose() - noisy.gram) * v + eps * one[0].x));
  const auto m = martingale_terms(one, a, noisy, theta0, sch);
  REQUIRE(m.size() == 1);
  CHECK(m[0] == doctest::Approx(expect).epsilon(1e-14));
}

}
