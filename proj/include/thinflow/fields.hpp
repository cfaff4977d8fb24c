#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "thinflow/bump.hpp"
#include "thinflow/complex.hpp"
#include "thinflow/conformal.hpp"
#include "thinflow/cutoff.hpp"
#include "thinflow/errors.hpp"
#include "thinflow/quadrature.hpp"

namespace thinflow {

// Velocities are complex numbers u1 + i u2. In that identification the
// transpose Jacobian DT^t is multiplication by conj(T') and perp is
// multiplication by i, so
//
//   K(x, y) = conj(T'(x)) i / (2 pi) * [1/conj(T(x) - T(y)) - 1/conj(T(x) - T(y)*)]
//   H(x)    = conj(T'(x)) i / (2 pi) / conj(T(x)),   T(y)* = T(y) / |T(y)|^2.

template <typename Scalar>
inline Complex<Scalar> kernel_bracket(const Complex<Scalar>& tx, const Complex<Scalar>& ty) {
  const Complex<Scalar> ty_star = Scalar(1) / std::conj(ty);
  return Scalar(1) / std::conj(tx - ty) - Scalar(1) / std::conj(tx - ty_star);
}

template <typename Scalar>
inline Complex<Scalar> kernel_prefactor(const Complex<Scalar>& dtx) {
  return std::conj(dtx) * Complex<Scalar>(0, 1) / (2 * std::numbers::pi_v<Scalar>);
}

/// Biot-Savart kernel of the exterior of Omega_eps (eps = 0: of the plate).
template <typename Scalar>
Complex<Scalar> biot_savart_kernel(const ObstacleFamily<Scalar>& map, const Complex<Scalar>& x,
                                   const Complex<Scalar>& y) {
  if (x == y) throw SingularityError("Biot-Savart kernel evaluated at x == y");
  const auto tx = map.eval(x), ty = map.eval(y);
  if (!(std::abs(ty) > 1)) throw DomainError("kernel source point must be strictly exterior");
  return kernel_prefactor(map.deriv(x)) * kernel_bracket(tx, ty);
}

/// Same kernel assembled with real 2x2 matrices; an independent route to the
/// complex form above.
template <typename Scalar>
Vec2<Scalar> biot_savart_kernel_matrix(const ObstacleFamily<Scalar>& map, const Vec2<Scalar>& x,
                                       const Vec2<Scalar>& y) {
  const auto xc = to_complex(x), yc = to_complex(y);
  const Vec2<Scalar> tx = to_vec(map.eval(xc));
  const Vec2<Scalar> ty = to_vec(map.eval(yc));
  const Vec2<Scalar> ty_star = ty / ty.squaredNorm();
  const Mat2<Scalar> jac = jacobian_matrix(map.deriv(xc));
  const Mat2<Scalar> rot = perp_matrix<Scalar>();
  const Vec2<Scalar> a = tx - ty, b = tx - ty_star;
  const Vec2<Scalar> bracket = rot * a / a.squaredNorm() - rot * b / b.squaredNorm();
  return jac.transpose() * bracket / (2 * std::numbers::pi_v<Scalar>);
}

template <typename Scalar>
Complex<Scalar> harmonic_field(const ObstacleFamily<Scalar>& map, const Complex<Scalar>& x) {
  return kernel_prefactor(map.deriv(x)) / std::conj(map.eval(x));
}

template <typename Scalar>
Vec2<Scalar> harmonic_field_matrix(const ObstacleFamily<Scalar>& map, const Vec2<Scalar>& x) {
  const auto xc = to_complex(x);
  const Vec2<Scalar> t = to_vec(map.eval(xc));
  const Mat2<Scalar> jac = jacobian_matrix(map.deriv(xc));
  return jac.transpose() * (perp_matrix<Scalar>() * t / t.squaredNorm()) /
         (2 * std::numbers::pi_v<Scalar>);
}

/// K_eps[omega0]: the velocity induced by the bump vorticity, by polar
/// Gauss-Legendre quadrature over each bump with order doubling until two
/// successive orders agree to `tol`. Targets within two radii of a bump use
/// a polar rule centred on the target, which absorbs the 1/|x-y| singularity.
template <typename Scalar>
class InducedVelocity {
 public:
  using C = Complex<Scalar>;

  InducedVelocity(ObstacleFamily<Scalar> family, BumpVorticity<Scalar> omega0,
                  Scalar tol = Scalar(1e-9), int first_order = 16, int max_order = 512)
      : family_(family), omega0_(std::move(omega0)), tol_(tol), first_order_(first_order),
        max_order_(max_order), cache_(std::make_shared<Cache>()) {}

  const ObstacleFamily<Scalar>& family() const { return family_; }
  const BumpVorticity<Scalar>& omega0() const { return omega0_; }
  Scalar tolerance() const { return tol_; }

  /// K[omega0](x) for x exterior to the obstacle.
  C operator()(const C& x) const {
    if (omega0_.empty()) return {};
    return at(x, family_.eval(x), family_.deriv(x));
  }

  /// Same, with the target's map value and derivative supplied; used for
  /// one-sided traces on the plate.
  C at(const C& x, const C& tx, const C& dtx) const {
    if (omega0_.empty()) return {};
    C prev = bracket_sum(x, tx, first_order_);
    for (int n = 2 * first_order_; n <= max_order_; n *= 2) {
      const C next = bracket_sum(x, tx, n);
      const C u_prev = kernel_prefactor(dtx) * prev, u_next = kernel_prefactor(dtx) * next;
      if (std::abs(u_next - u_prev) <= tol_ * std::max(Scalar(1), std::abs(u_next))) return u_next;
      prev = next;
    }
    throw QuadratureError("Biot-Savart quadrature did not converge");
  }

  /// Fixed-order evaluation, for self-convergence studies.
  C at_order(const C& x, int order) const {
    if (omega0_.empty()) return {};
    return kernel_prefactor(family_.deriv(x)) * bracket_sum(x, family_.eval(x), order);
  }

 private:
  struct Nodes {
    std::vector<C> ty;
    std::vector<Scalar> weight;  // quadrature weight times vorticity
  };
  struct Cache {
    std::mutex mutex;
    std::map<std::pair<std::size_t, int>, Nodes> nodes;
  };

  const Nodes& far_nodes(std::size_t k, int order) const {
    std::lock_guard<std::mutex> lock(cache_->mutex);
    auto key = std::make_pair(k, order);
    auto it = cache_->nodes.find(key);
    if (it != cache_->nodes.end()) return it->second;
    const auto& b = omega0_.bumps()[k];
    const auto& rule = gauss_legendre<Scalar>(order);
    const int n_phi = 2 * order;
    const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
    Nodes nodes;
    nodes.ty.reserve(order * n_phi);
    nodes.weight.reserve(order * n_phi);
    for (int i = 0; i < order; ++i) {
      const Scalar r = (rule.nodes(i) + 1) / 2;
      const Scalar wr = rule.weights(i) / 2 * r * b.radius * b.radius * (two_pi / n_phi) *
                        b.amplitude * Bump<Scalar>::profile(r);
      for (int j = 0; j < n_phi; ++j) {
        const C y = b.center + b.radius * std::polar(r, two_pi * j / n_phi);
        nodes.ty.push_back(family_.base().eval(y) / family_.scale());
        nodes.weight.push_back(wr);
      }
    }
    return cache_->nodes.emplace(key, std::move(nodes)).first->second;
  }

  C bracket_sum(const C& x, const C& tx, int order) const {
    C sum{};
    const auto& bumps = omega0_.bumps();
    for (std::size_t k = 0; k < bumps.size(); ++k) {
      const auto& b = bumps[k];
      const Scalar d = std::abs(x - b.center);
      if (d >= 2 * b.radius) {
        const Nodes& nodes = far_nodes(k, order);
        C s{};
        for (std::size_t q = 0; q < nodes.ty.size(); ++q)
          s += nodes.weight[q] * kernel_bracket(tx, nodes.ty[q]);
        sum += s;
      } else {
        sum += near_sum(b, x, tx, order);
      }
    }
    return sum;
  }

  C near_sum(const Bump<Scalar>& b, const C& x, const C& tx, int order) const {
    const auto& rule_r = gauss_legendre<Scalar>(order);
    const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
    const C rel = x - b.center;
    const Scalar d = std::abs(rel), rho = b.radius;
    auto ray = [&](Scalar phi, Scalar r0, Scalar r1) {
      const C e = std::polar(Scalar(1), phi);
      const Scalar half = (r1 - r0) / 2, mid = (r1 + r0) / 2;
      C s{};
      for (int i = 0; i < order; ++i) {
        const Scalar r = mid + half * rule_r.nodes(i);
        const C y = x + r * e;
        const Scalar val = b(y);
        if (val == 0) continue;
        const C ty = family_.base().eval(y) / family_.scale();
        s += rule_r.weights(i) * half * r * val * kernel_bracket(tx, ty);
      }
      return s;
    };
    C sum{};
    if (d <= rho) {
      const int n_phi = 2 * order;
      for (int j = 0; j < n_phi; ++j) {
        const Scalar phi = two_pi * j / n_phi;
        const C e = std::polar(Scalar(1), phi);
        const Scalar p = (std::conj(e) * rel).real();
        const Scalar r_out = -p + std::sqrt(std::max(Scalar(0), p * p + rho * rho - d * d));
        sum += (two_pi / n_phi) * ray(phi, Scalar(0), r_out);
      }
    } else {
      const auto& rule_phi = gauss_legendre<Scalar>(2 * order);
      const Scalar phi_c = std::arg(-rel);
      const Scalar half_width = std::asin(rho / d);
      for (Eigen::Index j = 0; j < rule_phi.nodes.size(); ++j) {
        const Scalar phi = phi_c + half_width * rule_phi.nodes(j);
        const C e = std::polar(Scalar(1), phi);
        const Scalar p = (std::conj(e) * (-rel)).real();
        const Scalar disc = std::sqrt(std::max(Scalar(0), rho * rho - d * d + p * p));
        sum += rule_phi.weights(j) * half_width * ray(phi, p - disc, p + disc);
      }
    }
    return sum;
  }

  ObstacleFamily<Scalar> family_;
  BumpVorticity<Scalar> omega0_;
  Scalar tol_;
  int first_order_;
  int max_order_;
  std::shared_ptr<Cache> cache_;
};

/// Every explicit field of one (flow, eps, lambda) configuration. With
/// eps = 0 the same evaluators give the limit fields around the plate.
template <typename Scalar>
class FieldSet {
 public:
  using C = Complex<Scalar>;

  FieldSet(FlowData<Scalar> flow, ObstacleFamily<Scalar> family,
           CutoffProfile<Scalar> profile = {}, Scalar tol = Scalar(1e-9))
      : flow_(std::move(flow)), family_(family), profile_(profile),
        induced_(family, flow_.omega0, tol), alpha_(flow_.alpha()) {}

  const FlowData<Scalar>& flow() const { return flow_; }
  const ObstacleFamily<Scalar>& family() const { return family_; }
  const CutoffProfile<Scalar>& profile() const { return profile_; }
  const InducedVelocity<Scalar>& induced_velocity() const { return induced_; }
  Scalar alpha() const { return alpha_; }

  C kernel(const C& x, const C& y) const { return biot_savart_kernel(family_, x, y); }
  C harmonic(const C& x) const { return harmonic_field(family_, x); }
  C induced(const C& x) const { return induced_(x); }

  /// u0^eps = K_eps[omega0] + alpha H_eps (u0 itself when eps = 0).
  C initial(const C& x) const {
    const C tx = family_.eval(x), dtx = family_.deriv(x);
    return induced_.at(x, tx, dtx) + alpha_ * kernel_prefactor(dtx) / std::conj(tx);
  }

  /// Extension by zero inside the obstacle.
  C initial_extended(const C& x) const {
    if (family_.epsilon() > 0 && !family_.exterior(x)) return {};
    return initial(x);
  }

  Scalar cutoff(const C& x) const { return cutoff_eval(profile_, family_, x); }

  /// v^eps = alpha H_eps Phi^{eps,lambda}.
  C background(const C& x) const {
    const Scalar phi = cutoff(x);
    if (phi == 0) return {};
    return alpha_ * phi * harmonic(x);
  }

  /// W0^eps = K_eps[omega0] + alpha (1 - Phi) H_eps.
  C shifted(const C& x) const {
    const C tx = family_.eval(x), dtx = family_.deriv(x);
    const Scalar phi = profile_.of_modulus(std::abs(tx));
    return induced_.at(x, tx, dtx) + alpha_ * (1 - phi) * kernel_prefactor(dtx) / std::conj(tx);
  }

  /// One-sided boundary value of the limit velocity on the plate
  /// (eps = 0 only), from the closed-form traces of T and T'.
  C limit_trace(Scalar s, Side side) const {
    if (family_.epsilon() != 0) throw DomainError("limit traces exist only for eps = 0");
    const auto tr = family_.base().trace(s, side);
    const C x = family_.base().arc().point(s);
    return induced_.at(x, tr.value, tr.deriv) + alpha_ * kernel_prefactor(tr.deriv) / std::conj(tr.value);
  }

  /// Vortex-sheet density g(s) on the plate, so that curl u0 = omega0 + g delta_Gamma
  /// with respect to arc length. The jump is taken as (right trace - left
  /// trace) . tau, where tau points from -1 to +1; for the segment the right
  /// side is below.
  Scalar jump_density(Scalar s) const {
    const C tau = family_.base().arc().unit_tangent(s);
    const C jump = limit_trace(s, Side::below) - limit_trace(s, Side::above);
    return (std::conj(tau) * jump).real();
  }

 private:
  FlowData<Scalar> flow_;
  ObstacleFamily<Scalar> family_;
  CutoffProfile<Scalar> profile_;
  InducedVelocity<Scalar> induced_;
  Scalar alpha_;
};

}  // namespace thinflow
