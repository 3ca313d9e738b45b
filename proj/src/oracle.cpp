#include "sgdinf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sgdinf {

namespace {

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

}  // namespace

EigenSystem eigendecompose(const Matrix& input) {
  const Eigen::Index n = input.rows();
  if (input.cols() != n || n == 0) throw ContractError("matrix must be square");
  if (!input.allFinite()) throw ContractError("matrix must be finite");
  if ((input - input.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw ContractError("matrix must be symmetric");
  }
  Matrix a = 0.5 * (input + input.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double scale = a.norm();
  const double tol = 1e-15 * (scale > 0.0 ? scale : 1.0);

  for (int sweep = 0; sweep < 100 && off_diagonal_norm(a) > tol; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) {
    return a(i, i) > a(j, j);
  });
  EigenSystem out{Matrix(n, n), Vector(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigvals[k] = a(order[k], order[k]);
    out.eigvecs.col(k) = v.col(order[k]);
  }
  if (!(out.eigvals[n - 1] > 0.0)) {
    throw ContractError("matrix is not positive definite");
  }
  return out;
}

Vector product_form_iterate(std::span<const StreamSample> samples,
                            const Vector& theta0, const StepSchedule& schedule) {
  const Eigen::Index d = theta0.size();
  Matrix r = Matrix::Identity(d, d);
  Vector driven = Vector::Zero(d);
  for (std::size_t k = samples.size(); k-- > 0;) {
    const auto& s = samples[k];
    if (s.x.size() != d) throw ContractError("sample dimension mismatch");
    const double eta = schedule.step(k + 1);
    const Vector rx = r * s.x;
    driven += eta * s.y * rx;
    r.noalias() -= eta * rx * s.x.transpose();
  }
  return r * theta0 + driven;
}

BiasValue bias(const Functional& a, const Matrix& gram, const Vector& theta0,
               const Vector& beta_star, const StepSchedule& schedule,
               std::uint64_t t) {
  const auto eig = eigendecompose(gram);
  BiasValue out;
  out.reliable = schedule.step(1) * eig.eigvals[0] < 1.0;
  Vector w = theta0 - beta_star;
  for (std::uint64_t i = 1; i <= t; ++i) {
    w -= schedule.step(i) * (gram * w);
  }
  out.value = a.a.dot(w);
  return out;
}

double theoretical_variance(const Functional& a, const EigenSystem& eig,
                            const Matrix& a_sigma, const StepSchedule& schedule,
                            std::uint64_t t) {
  const Vector ak = eig.eigvecs.transpose() * a.a;
  const Matrix s = eig.eigvecs.transpose() * a_sigma * eig.eigvecs;
  const Eigen::Index d = ak.size();
  double sum = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index l = 0; l < d; ++l) {
      sum += ak[k] * ak[l] * s(k, l) / (eig.eigvals[k] + eig.eigvals[l]);
    }
  }
  return schedule.eta() / std::sqrt(double(schedule.dim())) *
         std::pow(double(t), -schedule.alpha()) * sum;
}

std::vector<double> martingale_terms(std::span<const StreamSample> samples,
                                     const Functional& a,
                                     const ProblemSpec& spec,
                                     const Vector& theta0,
                                     const StepSchedule& schedule) {
  const std::size_t t = samples.size();
  const Eigen::Index d = theta0.size();

  // v_i forward: v_1 = beta* - theta0, v_{i+1} = (I - eta_i A) v_i.
  std::vector<Vector> v(t);
  Vector cur = spec.beta_star - theta0;
  for (std::size_t i = 1; i <= t; ++i) {
    v[i - 1] = cur;
    cur -= schedule.step(i) * (spec.gram * cur);
  }

  // w_i = R_i^T a backward: w_t = a, w_{i-1} = (I - eta_i X_i X_i^T) w_i.
  std::vector<double> terms(t);
  Vector w = a.a;
  for (std::size_t i = t; i >= 1; --i) {
    const auto& s = samples[i - 1];
    if (s.x.size() != d) throw ContractError("sample dimension mismatch");
    const double eta = schedule.step(i);
    const double eps = s.y - s.x.dot(spec.beta_star);
    const Vector& vi = v[i - 1];
    const double drift = w.dot(s.x) * s.x.dot(vi) - w.dot(spec.gram * vi);
    terms[t - i] = eta * (drift + eps * w.dot(s.x));
    w -= eta * w.dot(s.x) * s.x;
  }
  return terms;
}

}  // namespace sgdinf
