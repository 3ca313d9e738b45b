#ifndef SGDINF_INFERENCE_HPP
#define SGDINF_INFERENCE_HPP

#include <optional>
#include <string>

#include "sgdinf/core_model.hpp"

namespace sgdinf {

/// Standard normal CDF via erfc; accurate to ~1e-16 absolute.
double normal_cdf(double x);

/// Inverse of normal_cdf on (0, 1): rational starting point plus Halley
/// refinement. Throws ContractError outside (0, 1).
double normal_quantile(double p);

struct ConfidenceInterval {
  double center = 0.0;
  double half_width = 0.0;
  double level = 0.95;
  std::string functional_label;
  bool degenerate = false;  // v_hat == 0: point interval

  double lo() const { return center - half_width; }
  double hi() const { return center + half_width; }
  bool contains(double value) const { return lo() <= value && value <= hi(); }
};

/// estimate +/- z_{(1+level)/2} sqrt(v_hat).
ConfidenceInterval confidence_interval(double estimate, double v_hat,
                                       double level,
                                       std::string label = {});

struct WaldResult {
  double z = 0.0;
  double p_value = 1.0;
  std::optional<double> reject_at;  // significance level at which H0 is rejected
};

/// Two-sided test of H0: beta*_coord = 0 using a = e_coord;
/// p = 2 (1 - Phi(|z|)), z = theta_t[coord] / sqrt(v_hat).
WaldResult wald_test(const Vector& theta_t, int coord, double v_hat_ei,
                     std::optional<double> significance = std::nullopt);

}  // namespace sgdinf

#endif  // SGDINF_INFERENCE_HPP
