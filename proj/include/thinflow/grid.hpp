#pragma once

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Core>

#include "thinflow/complex.hpp"
#include "thinflow/conformal.hpp"
#include "thinflow/errors.hpp"

namespace thinflow {

/// Row-major node array: row i is the circle sigma = i * d_sigma, column j
/// the ray theta = j * d_theta.
template <typename T>
using GridArray = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Log-polar grid on the mapped plane |xi| >= 1, xi = T_eps(x) = e^{sigma + i theta}.
/// Row 0 is the wall Gamma_eps, row n_sigma - 1 the outer circle |xi| = r_max.
///
/// `metric` is a = |T_eps'|^2 at the preimage, so that Laplacian_x = a Laplacian_xi.
/// `factor` is g = a e^{-2 sigma} = |T_eps'/T_eps|^2, the factor for the
/// (sigma, theta) Laplacian:  Laplacian_x = g (d_sigma^2 + d_theta^2).
template <typename Scalar>
struct MappedGrid {
  using C = Complex<Scalar>;

  ObstacleFamily<Scalar> family;
  int n_sigma = 0;
  int n_theta = 0;
  Scalar r_max = 0;
  Scalar sigma_max = 0;
  Scalar d_sigma = 0;
  Scalar d_theta = 0;

  GridArray<C> x;           ///< physical node positions
  GridArray<C> log_deriv;   ///< zeta' = T_eps'/T_eps at the node
  GridArray<Scalar> metric;
  GridArray<Scalar> factor;

  Scalar epsilon() const { return family.epsilon(); }
  Scalar sigma(int i) const { return i * d_sigma; }
  Scalar theta(int j) const { return j * d_theta; }

  /// Physical area of the cell around an interior node.
  Scalar cell_area(int i, int j) const { return d_sigma * d_theta / factor(i, j); }

  /// Largest metric value and where it occurs.
  Scalar max_metric(int* row = nullptr, int* col = nullptr) const {
    Eigen::Index r, c;
    const Scalar m = metric.maxCoeff(&r, &c);
    if (row) *row = static_cast<int>(r);
    if (col) *col = static_cast<int>(c);
    return m;
  }

  /// Fractional grid coordinates (sigma / d_sigma, theta / d_theta) of a
  /// physical point; theta in [0, 2 pi).
  std::pair<Scalar, Scalar> locate(const C& p) const {
    const C zeta = std::log(family.eval(p));
    Scalar th = zeta.imag();
    if (th < 0) th += 2 * std::numbers::pi_v<Scalar>;
    return {zeta.real() / d_sigma, th / d_theta};
  }
};

/// Builds the grid. `metric_cap` bounds a; the endpoint images make a grow
/// like 1/eps^2 on the wall, so tiny eps overflows it.
template <typename Scalar>
MappedGrid<Scalar> build_grid(Scalar eps, int n_sigma, int n_theta, Scalar r_max = 100,
                              Scalar metric_cap = Scalar(1e12)) {
  if (!(eps > 0)) throw DomainError("grid needs eps > 0");
  if (!(r_max >= 50)) throw DomainError("grid needs r_max >= 50");
  if (n_sigma < 32 || n_theta < 32) throw DomainError("grid counts must be >= 32");
  if (n_theta % 2 != 0) throw DomainError("n_theta must be even");
  MappedGrid<Scalar> g;
  g.family = ObstacleFamily<Scalar>(eps);
  g.n_sigma = n_sigma;
  g.n_theta = n_theta;
  g.r_max = r_max;
  g.sigma_max = std::log(r_max);
  g.d_sigma = g.sigma_max / (n_sigma - 1);
  g.d_theta = 2 * std::numbers::pi_v<Scalar> / n_theta;
  g.x.resize(n_sigma, n_theta);
  g.log_deriv.resize(n_sigma, n_theta);
  g.metric.resize(n_sigma, n_theta);
  g.factor.resize(n_sigma, n_theta);
  for (int i = 0; i < n_sigma; ++i) {
    for (int j = 0; j < n_theta; ++j) {
      const Complex<Scalar> xi = std::polar(std::exp(g.sigma(i)), g.theta(j));
      const Complex<Scalar> x = g.family.inverse(xi);
      const Complex<Scalar> d = g.family.deriv(x);
      g.x(i, j) = x;
      g.log_deriv(i, j) = d / xi;
      g.metric(i, j) = std::norm(d);
      g.factor(i, j) = std::norm(d / xi);
      if (!(g.metric(i, j) <= metric_cap)) {
        std::ostringstream msg;
        msg << "metric overflow: a = " << g.metric(i, j) << " exceeds cap " << metric_cap << " at node (" << i
            << ", " << j << "), x = (" << x.real() << ", " << x.imag() << ")";
        throw DomainError(msg.str());
      }
    }
  }
  return g;
}

}  // namespace thinflow
