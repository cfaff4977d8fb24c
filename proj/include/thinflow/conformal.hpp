#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "thinflow/complex.hpp"
#include "thinflow/errors.hpp"

namespace thinflow {

enum class Side { above, below };

/// Limit shape of the obstacle, normalized so that its endpoints are -1 and +1.
template <typename Scalar>
struct JordanArc {
  enum class Kind { segment };
  Kind kind = Kind::segment;

  Complex<Scalar> start() const { return {-1, 0}; }
  Complex<Scalar> end() const { return {1, 0}; }

  /// s in [0, 1] -> point on the arc.
  Complex<Scalar> point(Scalar s) const { return {Scalar(-1) + 2 * s, 0}; }
  /// d/ds of point(s).
  Complex<Scalar> velocity(Scalar /*s*/) const { return {2, 0}; }
  Complex<Scalar> unit_tangent(Scalar s) const {
    const auto v = velocity(s);
    return v / std::abs(v);
  }
  Scalar parameter_of(Scalar x) const { return (x + 1) / 2; }
};

/// One-sided boundary values of the exterior map on the open arc.
template <typename Scalar>
struct MapTrace {
  Complex<Scalar> value;
  Complex<Scalar> deriv;
};

/// Exterior map of the flat plate [-1, 1] onto {|w| > 1}:
///
///   T(z) = z + sqrt(z^2 - 1),   sqrt(z^2 - 1) := z * sqrt(1 - 1/z^2)
///
/// with the principal square root, so the cut is exactly the segment and
/// T(z) ~ 2z at infinity. The inverse is the Joukowski map (w + 1/w)/2.
template <typename Scalar>
class SegmentMap {
 public:
  using C = Complex<Scalar>;

  static constexpr Scalar farfield_beta = 2;

  JordanArc<Scalar> arc() const { return {}; }

  static bool on_cut(const C& z) { return z.imag() == 0 && std::abs(z.real()) < 1; }
  static bool is_endpoint(const C& z) { return z.imag() == 0 && std::abs(z.real()) == 1; }

  /// sqrt(z^2 - 1) on the branch that behaves like z at infinity.
  static C radical(const C& z) {
    if (on_cut(z))
      throw BranchError("point lies on the cut (-1,1); supply a side via trace()");
    const C one(1);
    return z * std::sqrt(one - one / (z * z));
  }

  C eval(const C& z) const {
    if (is_endpoint(z)) return z;
    return z + radical(z);
  }

  /// T'(z) = 1 + z / sqrt(z^2 - 1) = T(z) / sqrt(z^2 - 1).
  C deriv(const C& z) const {
    if (is_endpoint(z)) throw SingularityError("T' is singular at the arc endpoints");
    const C s = radical(z);
    return (z + s) / s;
  }

  /// T''(z) = -1 / (z^2 - 1)^{3/2}.
  C second_deriv(const C& z) const {
    if (is_endpoint(z)) throw SingularityError("T'' is singular at the arc endpoints");
    const C s = radical(z);
    return -C(1) / (s * s * s);
  }

  C inverse(const C& w) const {
    if (std::abs(w) < Scalar(1) - Scalar(1e-13))
      throw DomainError("inverse map requires |w| >= 1");
    return (w + C(1) / w) / Scalar(2);
  }

  /// Boundary values on the open arc at abscissa x in (-1, 1), from the
  /// closed-form limits of T and T'.
  MapTrace<Scalar> trace_at(Scalar x, Side side) const {
    if (!(std::abs(x) < 1)) throw SingularityError("trace requested at or beyond an endpoint");
    const Scalar r = std::sqrt((1 - x) * (1 + x));
    const Scalar sgn = side == Side::above ? Scalar(1) : Scalar(-1);
    return {C(x, sgn * r), C(1, -sgn * x / r)};
  }

  /// Trace at arc parameter s in (0, 1).
  MapTrace<Scalar> trace(Scalar s, Side side) const {
    if (!(s > 0 && s < 1)) throw SingularityError("trace requested at an arc endpoint");
    return trace_at(arc().point(s).real(), side);
  }
};

/// The shrinking-obstacle family T_eps = T / (1 + eps). The obstacle
/// Omega_eps is the preimage of the disk of radius 1 + eps, an ellipse around
/// the plate.
template <typename Scalar>
class ObstacleFamily {
 public:
  using C = Complex<Scalar>;

  ObstacleFamily() = default;
  explicit ObstacleFamily(Scalar eps, SegmentMap<Scalar> base = {}) : base_(base), eps_(eps) {
    if (!(eps >= 0)) throw DomainError("obstacle parameter must be >= 0");
  }

  Scalar epsilon() const { return eps_; }
  Scalar scale() const { return 1 + eps_; }
  const SegmentMap<Scalar>& base() const { return base_; }

  /// |T(z)| >= 1 + eps up to rounding.
  bool exterior(const C& z) const {
    if (eps_ == 0) return !SegmentMap<Scalar>::on_cut(z);
    if (SegmentMap<Scalar>::on_cut(z) || SegmentMap<Scalar>::is_endpoint(z)) return false;
    return std::abs(base_.eval(z)) >= scale() * (1 - Scalar(1e-12));
  }

  C eval(const C& z) const {
    check(z);
    return base_.eval(z) / scale();
  }
  C deriv(const C& z) const {
    check(z);
    return base_.deriv(z) / scale();
  }
  C second_deriv(const C& z) const {
    check(z);
    return base_.second_deriv(z) / scale();
  }
  C inverse(const C& w) const {
    if (std::abs(w) < Scalar(1) - Scalar(1e-13))
      throw DomainError("family inverse requires |w| >= 1");
    return base_.inverse(scale() * w);
  }

  /// Point of Gamma_eps with mapped angle theta.
  C boundary_point(Scalar theta) const { return inverse(std::polar(Scalar(1), theta)); }

  /// Semi-axes (major, minor) of the elliptical obstacle.
  std::pair<Scalar, Scalar> semi_axes() const {
    const Scalar r = scale();
    return {(r + 1 / r) / 2, (r - 1 / r) / 2};
  }

 private:
  void check(const C& z) const {
    if (eps_ > 0 && !exterior(z)) throw DomainError("point lies inside the obstacle");
  }

  SegmentMap<Scalar> base_{};
  Scalar eps_ = 0;
};

/// n points of Gamma_eps at mapped angles 2 pi k / n, counterclockwise.
template <typename Scalar>
std::vector<Complex<Scalar>> boundary_sample(const ObstacleFamily<Scalar>& family, int n) {
  if (n < 4) throw DomainError("boundary_sample needs at least 4 points");
  if (!(family.epsilon() > 0)) throw DomainError("boundary_sample needs eps > 0");
  std::vector<Complex<Scalar>> pts;
  pts.reserve(n);
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  for (int k = 0; k < n; ++k) pts.push_back(family.boundary_point(two_pi * k / n));
  return pts;
}

/// (value, derivative) of the base map on one side of the arc at parameter s.
template <typename Scalar>
MapTrace<Scalar> one_sided_map_trace(const SegmentMap<Scalar>& map, Scalar s, Side side) {
  return map.trace(s, side);
}

}  // namespace thinflow
