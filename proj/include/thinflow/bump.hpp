#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "thinflow/complex.hpp"
#include "thinflow/conformal.hpp"
#include "thinflow/errors.hpp"
#include "thinflow/quadrature.hpp"

namespace thinflow {

/// One smooth bump  A exp(1 - 1/(1 - |x-c|^2/rho^2))  supported in the disk
/// |x - c| < rho.
template <typename Scalar>
struct Bump {
  Complex<Scalar> center;
  Scalar radius = 1;
  Scalar amplitude = 0;

  /// Radial profile on s = |x-c|/rho.
  static Scalar profile(Scalar s) {
    const Scalar q = s * s;
    if (!(q < 1)) return 0;
    return std::exp(1 - 1 / (1 - q));
  }

  Scalar operator()(const Complex<Scalar>& x) const {
    return amplitude * profile(std::abs(x - center) / radius);
  }
};

/// Integral of the unit profile over the unit disk, pi * int_0^1 e^{1-1/v} dv.
template <typename Scalar>
Scalar unit_bump_mass(int panels = 64, int order = 32) {
  const Scalar i0 = integrate_composite<Scalar>(
      [](Scalar v) { return v > 0 ? std::exp(1 - 1 / v) : Scalar(0); }, Scalar(0), Scalar(1),
      panels, order);
  return std::numbers::pi_v<Scalar> * i0;
}

/// Sum of compactly supported bumps; the initial vorticity.
template <typename Scalar>
class BumpVorticity {
 public:
  BumpVorticity() = default;

  /// Validates that every support stays a positive distance away from the
  /// obstacle Omega_{eps0}, hence from the plate for every eps <= eps0.
  explicit BumpVorticity(std::vector<Bump<Scalar>> bumps, Scalar eps0 = Scalar(0.2))
      : bumps_(std::move(bumps)), eps0_(eps0) {
    for (std::size_t k = 0; k < bumps_.size(); ++k) {
      const auto& b = bumps_[k];
      if (!(b.radius > 0)) throw ConfigError("bump " + std::to_string(k) + ": radius must be > 0");
      const Scalar gap = clearance(b);
      if (!(gap > 0))
        throw ConfigError("bump " + std::to_string(k) + ": support intersects the obstacle (clearance " +
                          std::to_string(static_cast<double>(gap)) + ")");
    }
  }

  const std::vector<Bump<Scalar>>& bumps() const { return bumps_; }
  bool empty() const { return bumps_.empty(); }
  Scalar eps0() const { return eps0_; }

  Scalar operator()(const Complex<Scalar>& x) const {
    Scalar s = 0;
    for (const auto& b : bumps_) s += b(x);
    return s;
  }

  /// Total vorticity m, from the closed radial integral of each bump.
  Scalar mass() const {
    const Scalar unit = unit_bump_mass<Scalar>();
    Scalar m = 0;
    for (const auto& b : bumps_) m += b.amplitude * b.radius * b.radius * unit;
    return m;
  }

  /// Total vorticity by direct polar quadrature of the summed field at the
  /// given radial order; used to check self-convergence of mass().
  Scalar mass_by_quadrature(int order) const {
    const auto& rule = gauss_legendre<Scalar>(order);
    const int n_phi = 2 * order;
    const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
    Scalar m = 0;
    for (const auto& b : bumps_) {
      for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
        const Scalar r = (rule.nodes(i) + 1) / 2;
        const Scalar wr = rule.weights(i) / 2 * r * b.radius * b.radius;
        for (int j = 0; j < n_phi; ++j) {
          const auto y = b.center + b.radius * std::polar(r, two_pi * j / n_phi);
          m += wr * (two_pi / n_phi) * (*this)(y);
        }
      }
    }
    return m;
  }

  /// Smallest distance from the disk to the plate segment.
  static Scalar distance_to_segment(const Bump<Scalar>& b) {
    const Scalar x = b.center.real(), y = b.center.imag();
    const Scalar dx = std::max(std::abs(x) - Scalar(1), Scalar(0));
    return std::hypot(dx, y) - b.radius;
  }

  /// Signed gap between the disk and the ellipse Omega_{eps0}.
  Scalar clearance(const Bump<Scalar>& b) const {
    if (distance_to_segment(b) <= 0) return distance_to_segment(b);
    if (eps0_ <= 0) return distance_to_segment(b);
    const ObstacleFamily<Scalar> fam(eps0_);
    if (!fam.exterior(b.center)) return -b.radius;
    const int n = 4096;
    Scalar dmin = std::numeric_limits<Scalar>::max();
    const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
    for (int k = 0; k < n; ++k)
      dmin = std::min(dmin, std::abs(fam.boundary_point(two_pi * k / n) - b.center));
    return dmin - b.radius;
  }

 private:
  std::vector<Bump<Scalar>> bumps_;
  Scalar eps0_ = Scalar(0.2);
};

/// Initial data of one flow problem. alpha is derived, never stored.
template <typename Scalar>
struct FlowData {
  Scalar gamma = 0;
  Scalar nu = Scalar(0.01);
  BumpVorticity<Scalar> omega0;

  Scalar m() const { return omega0.mass(); }
  Scalar alpha() const { return gamma + m(); }
};

}  // namespace thinflow
