#ifndef SGDINF_BASELINE_OLS_HPP
#define SGDINF_BASELINE_OLS_HPP

#include <cstdint>

#include "sgdinf/core_model.hpp"

namespace sgdinf {

/// Sufficient statistics sum X X^T and sum X Y. Mergeable by addition.
class OlsAccumulator {
 public:
  explicit OlsAccumulator(int dim);

  void add(const StreamSample& s);
  void merge(const OlsAccumulator& other);

  /// Full symmetric sum X X^T.
  Matrix gram() const;
  const Vector& xy() const { return xy_; }
  std::uint64_t n() const { return n_; }
  int dim() const { return int(xy_.size()); }

 private:
  Matrix gram_lower_;
  Vector xy_;
  std::uint64_t n_ = 0;
};

/// Cholesky-factored normal equations. Throws NumericError when the Gram is
/// singular or its reciprocal condition estimate is below 1e-12.
class OlsSolution {
 public:
  explicit OlsSolution(const OlsAccumulator& acc);

  const Vector& beta() const { return beta_; }
  /// (sum X X^T)^{-1} a
  Vector solve(const Vector& a) const { return llt_.solve(a); }

 private:
  Eigen::LLT<Matrix> llt_;
  Vector beta_;
};

/// beta_hat = A_hat^{-1} (1/n) sum X Y.
Vector ols_fit(const OlsAccumulator& acc);

/// Second-pass sum of squared-residual-weighted outer products.
class MeatAccumulator {
 public:
  explicit MeatAccumulator(Vector beta_hat);

  void add(const StreamSample& s);
  void merge(const MeatAccumulator& other);

  Matrix meat() const;
  std::uint64_t n() const { return n_; }

 private:
  Vector beta_;
  Matrix meat_lower_;
  std::uint64_t n_ = 0;
};

/// a^T A_hat^{-1} [(1/n^2) sum e_i^2 X_i X_i^T] A_hat^{-1} a.
double sandwich_variance(const OlsSolution& fit, const MeatAccumulator& meat,
                         const Functional& a);

}  // namespace sgdinf

#endif  // SGDINF_BASELINE_OLS_HPP
