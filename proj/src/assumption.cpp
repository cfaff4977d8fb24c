#include "thinflow/assumption.hpp"

#include <cmath>
#include <numbers>

#include "thinflow/conformal.hpp"
#include "thinflow/errors.hpp"
#include "thinflow/parallel.hpp"
#include "thinflow/quadrature.hpp"

namespace thinflow {

namespace {

using C = std::complex<double>;

double distance_to_plate(const C& x) {
  const double dx = std::max(std::abs(x.real()) - 1.0, 0.0);
  return std::hypot(dx, x.imag());
}

struct L3Result {
  double integral = 0;
  double sleeve_area = 0;
};

L3Result l3_gap(const ObstacleFamily<double>& family, double radius, const AssumptionOptions& opt) {
  const auto& rule = gauss_legendre<double>(opt.order);
  const double h = 2 * radius / opt.cells;
  const double shrink = 1 / family.scale() - 1;
  std::vector<L3Result> per_row(opt.cells);
  parallel_for(opt.cells, [&](std::size_t i) {
    L3Result acc;
    for (int j = 0; j < opt.cells; ++j) {
      const double x0 = -radius + i * h, y0 = -radius + j * h;
      for (int a = 0; a < opt.order; ++a) {
        for (int b = 0; b < opt.order; ++b) {
          const C x(x0 + h * (rule.nodes(a) + 1) / 2, y0 + h * (rule.nodes(b) + 1) / 2);
          const double w = rule.weights(a) * rule.weights(b) * h * h / 4;
          if (std::abs(x) >= radius || !family.exterior(x)) continue;
          if (distance_to_plate(x) <= opt.sleeve) {
            acc.sleeve_area += w;
            continue;
          }
          const double gap = std::abs(shrink * family.base().deriv(x));
          acc.integral += w * gap * gap * gap;
        }
      }
    }
    per_row[i] = acc;
  });
  L3Result total;
  for (const auto& r : per_row) {
    total.integral += r.integral;
    total.sleeve_area += r.sleeve_area;
  }
  return total;
}

}  // namespace

AssumptionReport assumption_check(const std::vector<double>& eps_list, double radius,
                                  const AssumptionOptions& options) {
  if (eps_list.empty()) throw DomainError("assumption_check needs at least one eps");
  for (std::size_t k = 1; k < eps_list.size(); ++k)
    if (!(eps_list[k] < eps_list[k - 1])) throw DomainError("eps list must be strictly decreasing");
  if (!(radius >= 4)) throw DomainError("assumption_check requires R >= 4");

  AssumptionReport report;
  report.radius = radius;
  report.sleeve = options.sleeve;
  report.cells = options.cells;
  report.order = options.order;

  const double two_pi = 2 * std::numbers::pi;
  const int n_theta = 256;
  const int n_radii = 64;

  for (double eps : eps_list) {
    const ObstacleFamily<double> family(eps);
    const SegmentMap<double>& base = family.base();
    AssumptionRow row;
    row.eps = eps;

    // (i) and (ii) on clouds of mapped polar points, |w| in [1, 1e4].
    for (int a = 0; a < n_radii; ++a) {
      const double rho = std::pow(10.0, 4.0 * a / (n_radii - 1));
      for (int b = 0; b < n_theta; ++b) {
        const C w = std::polar(rho, two_pi * (b + 0.5) / n_theta);
        const C x = family.inverse(w);
        if (family.exterior(x)) {
          const C t = base.eval(x);
          row.sup_relative_deviation =
              std::max(row.sup_relative_deviation, std::abs((family.eval(x) - t) / t));
        }
        // d/dw T^{-1}((1+eps) w) = (1+eps) (1 - 1/((1+eps) w)^2) / 2
        const C sw = family.scale() * w;
        const C dinv = family.scale() * (1.0 - 1.0 / (sw * sw)) / 2.0;
        row.sup_inverse_jacobian = std::max(row.sup_inverse_jacobian, std::norm(dinv));
      }
    }

    const auto l3 = l3_gap(family, radius, options);
    row.l3_derivative_gap = std::cbrt(l3.integral);
    row.sleeve_area_excluded = l3.sleeve_area;

    // (iv), (v) on circles |x| in [R, 1e4].
    for (int a = 0; a < n_radii; ++a) {
      const double r = radius * std::pow(1e4 / radius, double(a) / (n_radii - 1));
      for (int b = 0; b < n_theta; ++b) {
        const C x = std::polar(r, two_pi * (b + 0.5) / n_theta);
        row.sup_derivative_outside = std::max(row.sup_derivative_outside, std::abs(family.deriv(x)));
        row.sup_scaled_hessian = std::max(row.sup_scaled_hessian, r * std::abs(family.second_deriv(x)));
      }
    }
    report.rows.push_back(row);
  }

  report.relative_deviation_decreasing = true;
  report.l3_gap_decreasing = true;
  for (std::size_t k = 1; k < report.rows.size(); ++k) {
    if (!(report.rows[k].sup_relative_deviation < report.rows[k - 1].sup_relative_deviation))
      report.relative_deviation_decreasing = false;
    if (!(report.rows[k].l3_derivative_gap < report.rows[k - 1].l3_derivative_gap))
      report.l3_gap_decreasing = false;
  }
  return report;
}

}  // namespace thinflow
