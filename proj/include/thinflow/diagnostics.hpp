#pragma once

#include <cmath>
#include <numbers>

#include "thinflow/cutoff.hpp"
#include "thinflow/grid.hpp"
#include "thinflow/solver.hpp"

namespace thinflow {

template <typename Scalar>
struct EnergyRecord {
  Scalar energy = 0;       ///< ||W||^2 over the grid, W = u - v^eps
  Scalar grad_energy = 0;  ///< ||grad W||^2 over the grid
  Scalar quartic = 0;      ///< ||W||_{L^4}^4; not conformally invariant, carries 1/g
};

/// Energy of W = u - alpha Phi H on the truncated grid. In mapped
/// coordinates alpha Phi H has stream gradient (alpha Phi / 2 pi, 0), and both
/// ||W||^2 and the Dirichlet integral of each component are conformally
/// invariant, so no metric factor enters. Trapezoid weights in sigma.
template <typename Scalar>
EnergyRecord<Scalar> energy_monitor(const SolverState<Scalar>& state, const MappedGrid<Scalar>& grid,
                                    const CutoffProfile<Scalar>& profile) {
  const int n = grid.n_sigma, m = grid.n_theta;
  GridArray<Scalar> ps, pt;
  stream_gradient(state.psi, grid, ps, pt);
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  GridArray<Complex<Scalar>> wphys(n, m);
  Scalar energy = 0, quartic = 0;
  for (int i = 0; i < n; ++i) {
    const Scalar shift = state.alpha * profile.of_modulus(std::exp(grid.sigma(i))) / two_pi;
    const Scalar weight = (i == 0 || i == n - 1) ? Scalar(0.5) : Scalar(1);
    Scalar row = 0, row4 = 0;
    for (int j = 0; j < m; ++j) {
      const Scalar a = ps(i, j) - shift, b = pt(i, j);
      row += a * a + b * b;
      wphys(i, j) = physical_velocity(grid.log_deriv(i, j), a, b);
      row4 += std::norm(wphys(i, j)) * (a * a + b * b);
    }
    energy += weight * row;
    quartic += weight * row4;
  }
  Scalar grad = 0;
  for (int i = 0; i < n; ++i) {
    const Scalar weight = (i == 0 || i == n - 1) ? Scalar(0.5) : Scalar(1);
    Scalar row = 0;
    for (int j = 0; j < m; ++j) {
      Complex<Scalar> ds;
      if (i == 0)
        ds = (-Scalar(3) * wphys(0, j) + Scalar(4) * wphys(1, j) - wphys(2, j)) / (2 * grid.d_sigma);
      else if (i == n - 1)
        ds = (Scalar(3) * wphys(i, j) - Scalar(4) * wphys(i - 1, j) + wphys(i - 2, j)) / (2 * grid.d_sigma);
      else
        ds = (wphys(i + 1, j) - wphys(i - 1, j)) / (2 * grid.d_sigma);
      const Complex<Scalar> dt = (wphys(i, (j + 1) % m) - wphys(i, (j + m - 1) % m)) / (2 * grid.d_theta);
      row += std::norm(ds) + std::norm(dt);
    }
    grad += weight * row;
  }
  const Scalar cell = grid.d_sigma * grid.d_theta;
  return {energy * cell, grad * cell, quartic * cell};
}

/// Tracks  ||W(t)||^2 + nu e^{2 C1 t} int_0^t e^{-2 C1 s} ||grad W||^2 ds <= e^{2 C1 t} C
/// with C = (1 + margin) ||W(0)||^2; the integral is a trapezoid over the
/// recorded times.
template <typename Scalar>
class EnergyEnvelope {
 public:
  EnergyEnvelope(Scalar nu, Scalar c1, Scalar margin) : nu_(nu), c1_(c1), margin_(margin) {}

  /// Records one time; returns lhs - rhs (<= 0 when the envelope holds).
  Scalar record(Scalar t, const EnergyRecord<Scalar>& e) {
    const Scalar weighted = std::exp(-2 * c1_ * t) * e.grad_energy;
    if (!started_) {
      constant_ = (1 + margin_) * e.energy;
      started_ = true;
    } else {
      integral_ += (t - last_t_) * (weighted + last_weighted_) / 2;
    }
    last_t_ = t;
    last_weighted_ = weighted;
    lhs_ = e.energy + nu_ * std::exp(2 * c1_ * t) * integral_;
    rhs_ = std::exp(2 * c1_ * t) * constant_;
    return lhs_ - rhs_;
  }

  Scalar lhs() const { return lhs_; }
  Scalar rhs() const { return rhs_; }
  Scalar constant() const { return constant_; }

 private:
  Scalar nu_, c1_, margin_;
  bool started_ = false;
  Scalar constant_ = 0, integral_ = 0, last_t_ = 0, last_weighted_ = 0, lhs_ = 0, rhs_ = 0;
};

}  // namespace thinflow
