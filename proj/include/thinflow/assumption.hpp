#pragma once

#include <vector>

namespace thinflow {

/// Numerical estimates of the five conditions on the map family T_eps,
/// one row per eps.
struct AssumptionRow {
  double eps = 0;
  double sup_relative_deviation = 0;  ///< sup |(T_eps - T) / T| over a sample cloud of Pi_eps
  double sup_inverse_jacobian = 0;    ///< sup |det D(T_eps^{-1})| over |w| >= 1
  double l3_derivative_gap = 0;       ///< ||DT_eps - DT||_{L^3(B(0,R) cap Pi_eps)}
  double sup_derivative_outside = 0;  ///< sup |DT_eps| outside B(0,R)
  double sup_scaled_hessian = 0;      ///< sup |x| |D^2 T_eps| outside B(0,R)
  double sleeve_area_excluded = 0;    ///< area of Pi_eps cap B(0,R) dropped by the sleeve
};

struct AssumptionReport {
  double radius = 4;
  double sleeve = 1e-3;
  int cells = 64;
  int order = 20;
  std::vector<AssumptionRow> rows;
  bool relative_deviation_decreasing = false;
  bool l3_gap_decreasing = false;
};

struct AssumptionOptions {
  int cells = 64;
  int order = 20;
  double sleeve = 1e-3;
};

/// eps_list must be strictly decreasing and radius >= 4.
AssumptionReport assumption_check(const std::vector<double>& eps_list, double radius,
                                  const AssumptionOptions& options = {});

}  // namespace thinflow
