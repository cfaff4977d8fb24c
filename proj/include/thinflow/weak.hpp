#pragma once

#include <cmath>

#include "thinflow/errors.hpp"
#include "thinflow/run.hpp"

namespace thinflow {

/// Divergence-free test field  chi(t) grad-perp eta(x)  with
/// eta = (1 - |x-c|^2/r^2)^8 on the disk and chi a smooth bump on (t_start, t_stop).
template <typename Scalar>
struct TestField {
  Complex<Scalar> center;
  Scalar radius = 1;
  Scalar t_start = 0, t_stop = 1;

  Scalar chi(Scalar t) const {
    const Scalar s = time_coord(t);
    return std::abs(s) < 1 ? std::exp(1 - 1 / (1 - s * s)) : Scalar(0);
  }
  Scalar chi_dot(Scalar t) const {
    const Scalar s = time_coord(t);
    if (!(std::abs(s) < 1)) return 0;
    const Scalar q = 1 - s * s;
    return chi(t) * (-2 * s / (q * q)) * (2 / (t_stop - t_start));
  }

  struct Spatial {
    Complex<Scalar> psi;      ///< grad-perp eta
    Complex<Scalar> lap_psi;  ///< Laplacian of grad-perp eta
    Scalar exx = 0, exy = 0, eyy = 0;
  };

  /// Spatial factor and derivatives, from f(q) = (1 - q/r^2)^8, q = |x-c|^2:
  /// d_i d_j eta = 2 f' delta_ij + 4 f'' d_i d_j,  grad Laplacian eta = 8 (2 f'' + q f''') d.
  Spatial spatial(const Complex<Scalar>& x) const {
    const Complex<Scalar> d = x - center;
    const Scalar q = std::norm(d), r2 = radius * radius;
    Spatial out;
    if (!(q < r2)) return out;
    const Scalar b = 1 - q / r2;
    const Scalar b5 = std::pow(b, 5);
    const Scalar f1 = -8 / r2 * b5 * b * b, f2 = 56 / (r2 * r2) * b5 * b, f3 = -336 / (r2 * r2 * r2) * b5;
    const Complex<Scalar> perp_d(-d.imag(), d.real());
    out.psi = 2 * f1 * perp_d;
    out.lap_psi = 8 * (2 * f2 + q * f3) * perp_d;
    out.exx = 2 * f1 + 4 * f2 * d.real() * d.real();
    out.eyy = 2 * f1 + 4 * f2 * d.imag() * d.imag();
    out.exy = 4 * f2 * d.real() * d.imag();
    return out;
  }

  /// Value of the full test field at (x, t).
  Complex<Scalar> operator()(const Complex<Scalar>& x, Scalar t) const { return chi(t) * spatial(x).psi; }

 private:
  Scalar time_coord(Scalar t) const { return (2 * t - t_start - t_stop) / (t_stop - t_start); }
};

/// | int int  u . psi_t + [(u . grad) psi] . u + nu u . Laplacian psi  dx dt |
/// over the recorded snapshots: midpoint rule on the patch, trapezoid in time.
template <typename Scalar>
Scalar weak_residual(const RunRecord<Scalar>& run, const TestField<Scalar>& field) {
  const auto& p = run.patch;
  const auto& c = field.center;
  const Scalar r = field.radius;
  if (c.real() - r < p.x_min || c.real() + r > p.x_max || c.imag() - r < p.y_min || c.imag() + r > p.y_max)
    throw DomainError("test field support leaves the probe patch");
  if (BumpVorticity<Scalar>::distance_to_segment(Bump<Scalar>{c, r, 0}) < p.delta)
    throw DomainError("test field support comes within delta of the curve");
  if (run.snapshots.size() < 2 || !(field.t_start >= run.snapshots.front().t) ||
      !(field.t_stop <= run.snapshots.back().t) || !(field.t_stop > field.t_start))
    throw DomainError("test field time support must lie inside the recorded window");

  std::vector<typename TestField<Scalar>::Spatial> sp(run.nodes.size());
  for (std::size_t k = 0; k < run.nodes.size(); ++k) sp[k] = field.spatial(run.nodes[k]);
  const Scalar nu = run.config.nu;
  std::vector<Scalar> slice(run.snapshots.size(), 0);
  for (std::size_t s = 0; s < run.snapshots.size(); ++s) {
    const Scalar t = run.snapshots[s].t;
    const Scalar chi = field.chi(t), chi_dot = field.chi_dot(t);
    if (chi == 0) continue;
    Scalar sum = 0;
    for (std::size_t k = 0; k < run.nodes.size(); ++k) {
      const auto& f = sp[k];
      const auto& u = run.snapshots[s].velocity[k];
      const Scalar u1 = u.real(), u2 = u.imag();
      const Scalar dot_psi = u1 * f.psi.real() + u2 * f.psi.imag();
      const Scalar convect = (u2 * u2 - u1 * u1) * f.exy + u1 * u2 * (f.exx - f.eyy);
      const Scalar visc = u1 * f.lap_psi.real() + u2 * f.lap_psi.imag();
      sum += chi_dot * dot_psi + chi * convect + nu * chi * visc;
    }
    slice[s] = sum * p.cell_area();
  }
  Scalar total = 0;
  for (std::size_t s = 1; s < slice.size(); ++s)
    total += (run.snapshots[s].t - run.snapshots[s - 1].t) * (slice[s] + slice[s - 1]) / 2;
  return std::abs(total);
}

}  // namespace thinflow
