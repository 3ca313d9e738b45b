#include "sgdinf/baseline_ols.hpp"

namespace sgdinf {

OlsAccumulator::OlsAccumulator(int dim)
    : gram_lower_(Matrix::Zero(dim, dim)), xy_(Vector::Zero(dim)) {}

void OlsAccumulator::add(const StreamSample& s) {
  if (s.x.size() != xy_.size()) throw ContractError("sample dimension mismatch");
  gram_lower_.selfadjointView<Eigen::Lower>().rankUpdate(s.x);
  xy_.noalias() += s.y * s.x;
  ++n_;
}

void OlsAccumulator::merge(const OlsAccumulator& other) {
  if (other.dim() != dim()) throw ContractError("accumulator dimension mismatch");
  gram_lower_ += other.gram_lower_;
  xy_ += other.xy_;
  n_ += other.n_;
}

Matrix OlsAccumulator::gram() const {
  return gram_lower_.selfadjointView<Eigen::Lower>();
}

OlsSolution::OlsSolution(const OlsAccumulator& acc) {
  if (acc.n() < std::uint64_t(acc.dim())) {
    throw NumericError("OLS requires at least d samples");
  }
  // Factor sum X X^T directly: A_hat = gram / n only rescales the system.
  const Matrix gram = acc.gram();
  llt_.compute(gram);
  if (llt_.info() != Eigen::Success) throw NumericError("singular Gram matrix");
  if (llt_.rcond() < 1e-12) throw NumericError("ill-conditioned Gram matrix");
  beta_ = llt_.solve(acc.xy());
  if ((gram * beta_ - acc.xy()).norm() > 1e-8 * acc.xy().norm()) {
    throw NumericError("normal equations not solved to tolerance");
  }
}

Vector ols_fit(const OlsAccumulator& acc) { return OlsSolution(acc).beta(); }

MeatAccumulator::MeatAccumulator(Vector beta_hat)
    : beta_(std::move(beta_hat)),
      meat_lower_(Matrix::Zero(beta_.size(), beta_.size())) {}

void MeatAccumulator::add(const StreamSample& s) {
  if (s.x.size() != beta_.size()) throw ContractError("sample dimension mismatch");
  const double r = s.y - s.x.dot(beta_);
  meat_lower_.selfadjointView<Eigen::Lower>().rankUpdate(s.x, r * r);
  ++n_;
}

void MeatAccumulator::merge(const MeatAccumulator& other) {
  meat_lower_ += other.meat_lower_;
  n_ += other.n_;
}

Matrix MeatAccumulator::meat() const {
  return meat_lower_.selfadjointView<Eigen::Lower>();
}

double sandwich_variance(const OlsSolution& fit, const MeatAccumulator& meat,
                         const Functional& a) {
  // A_hat^{-1} = n (sum X X^T)^{-1}; the n^2 cancels the 1/n^2.
  const Vector w = fit.solve(a.a);
  return w.dot(meat.meat() * w);
}

}  // namespace sgdinf
