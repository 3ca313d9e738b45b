#ifndef SGDINF_ORACLE_HPP
#define SGDINF_ORACLE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "sgdinf/core_model.hpp"

namespace sgdinf {

/// Orthonormal eigenbasis (columns) with eigenvalues sorted descending.
struct EigenSystem {
  Matrix eigvecs;
  Vector eigvals;
};

/// Cyclic Jacobi rotations. Rejects non-symmetric (1e-10) or non-PD input.
EigenSystem eigendecompose(const Matrix& a);

/**
 * Evaluates the closed-form product representation of theta_t,
 *
 *   theta_t = R_0 theta_0 + sum_i eta_i R_i X_i Y_i,
 *   R_i = (I - eta_t X_t X_t^T) ... (I - eta_{i+1} X_{i+1} X_{i+1}^T),
 *
 * by accumulating R_i right to left as a dense matrix. Shares no code with
 * the forward recursion in sgd_engine. Intended for t <= 1e4.
 */
Vector product_form_iterate(std::span<const StreamSample> samples,
                            const Vector& theta0, const StepSchedule& schedule);

struct BiasValue {
  double value = 0.0;
  bool reliable = true;  // false when eta_1 * lambda_max(A) >= 1
};

/// E<a, theta_t> - <a, beta*> = a^T prod_{i=1..t} (I - eta_i A) (theta0 - beta*).
BiasValue bias(const Functional& a, const Matrix& gram, const Vector& theta0,
               const Vector& beta_star, const StepSchedule& schedule,
               std::uint64_t t);

/// Leading-order Var<a, theta_t>:
/// eta d^{-1/2} t^{-alpha} sum_{k,k'} a_k a_k' [A_sigma]_{kk'} / (lambda_k + lambda_k').
double theoretical_variance(const Functional& a, const EigenSystem& eig,
                            const Matrix& a_sigma, const StepSchedule& schedule,
                            std::uint64_t t);

/**
 * Martingale increments of <a, theta_t> - E<a, theta_t>. Element k-1 holds
 * M_k; sample i contributes M_{t-i+1}:
 *
 *   eta_i <R_i^T a, (X_i X_i^T - A) v_i + eps_i X_i>,
 *   v_i = prod_{j<i} (I - eta_j A) (beta* - theta0).
 *
 * Their sum equals <a, theta_t> - <a, beta*> - bias on every realization.
 */
std::vector<double> martingale_terms(std::span<const StreamSample> samples,
                                     const Functional& a,
                                     const ProblemSpec& spec,
                                     const Vector& theta0,
                                     const StepSchedule& schedule);

}  // namespace sgdinf

#endif  // SGDINF_ORACLE_HPP
