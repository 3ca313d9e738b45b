#include "sgdinf/inference.hpp"

#include <cmath>
#include <numbers>

namespace sgdinf {

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

namespace {

// Acklam's rational approximation (relative error ~1.15e-9).
double quantile_seed(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ContractError("quantile requires p in (0, 1)");
  double x = quantile_seed(p);
  // Halley steps on the tail that keeps the residual well conditioned.
  for (int iter = 0; iter < 2; ++iter) {
    const double e = x < 0.0 ? normal_cdf(x) - p
                             : (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2);
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    const double u = e / pdf;
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

ConfidenceInterval confidence_interval(double estimate, double v_hat,
                                       double level, std::string label) {
  if (!(v_hat >= 0.0)) throw ContractError("v_hat must be non-negative");
  if (!(level > 0.0 && level < 1.0)) throw ContractError("level must lie in (0, 1)");
  ConfidenceInterval ci;
  ci.center = estimate;
  ci.level = level;
  ci.functional_label = std::move(label);
  ci.degenerate = v_hat == 0.0;
  ci.half_width = normal_quantile(0.5 * (1.0 + level)) * std::sqrt(v_hat);
  return ci;
}

WaldResult wald_test(const Vector& theta_t, int coord, double v_hat_ei,
                     std::optional<double> significance) {
  if (coord < 0 || coord >= theta_t.size()) {
    throw ContractError("coordinate out of range");
  }
  if (!(v_hat_ei > 0.0)) throw ContractError("Wald test requires v_hat > 0");
  WaldResult r;
  r.z = theta_t[coord] / std::sqrt(v_hat_ei);
  r.p_value = std::erfc(std::abs(r.z) / std::numbers::sqrt2);
  if (significance && r.p_value < *significance) r.reject_at = *significance;
  return r;
}

}  // namespace sgdinf
