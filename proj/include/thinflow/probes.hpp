#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "thinflow/complex.hpp"
#include "thinflow/conformal.hpp"
#include "thinflow/errors.hpp"

namespace thinflow {

/// Velocity sampler: point -> u1 + i u2.
template <typename Scalar>
using FieldSampler = std::function<Complex<Scalar>(const Complex<Scalar>&)>;

/// Closed contour z(t), t in [0, 1), traversed counterclockwise, with
/// its derivative dz/dt.
template <typename Scalar>
struct Contour {
  std::function<Complex<Scalar>(Scalar)> point;
  std::function<Complex<Scalar>(Scalar)> velocity;

  static Contour circle(Complex<Scalar> center, Scalar radius) {
    const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
    return {[=](Scalar t) { return center + std::polar(radius, two_pi * t); },
            [=](Scalar t) { return Complex<Scalar>(0, two_pi) * std::polar(radius, two_pi * t); }};
  }

  /// Gamma_eps, parametrized by the mapped angle.
  static Contour obstacle_boundary(const ObstacleFamily<Scalar>& family) {
    const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
    const Scalar r = family.scale();
    return {[=](Scalar t) { return family.boundary_point(two_pi * t); },
            [=](Scalar t) {
              // z = (r w + 1/(r w)) / 2 with w = e^{2 pi i t}
              const auto w = std::polar(Scalar(1), two_pi * t);
              const auto dw = Complex<Scalar>(0, two_pi) * w;
              return (r - Scalar(1) / (r * w * w)) * dw / Scalar(2);
            }};
  }

  /// Closed polyline through the given vertices, uniform in t per edge.
  static Contour polyline(std::vector<Complex<Scalar>> vertices) {
    const auto n = static_cast<Scalar>(vertices.size());
    auto locate = [vertices, n](Scalar t, Scalar& frac) {
      Scalar u = (t - std::floor(t)) * n;
      auto k = static_cast<std::size_t>(u);
      if (k >= vertices.size()) k = vertices.size() - 1;
      frac = u - static_cast<Scalar>(k);
      return k;
    };
    return {[vertices, locate](Scalar t) {
              Scalar f;
              const auto k = locate(t, f);
              const auto& a = vertices[k];
              const auto& b = vertices[(k + 1) % vertices.size()];
              return a + f * (b - a);
            },
            [vertices, locate, n](Scalar t) {
              Scalar f;
              const auto k = locate(t, f);
              return n * (vertices[(k + 1) % vertices.size()] - vertices[k]);
            }};
  }
};

template <typename Scalar>
struct CirculationResult {
  Scalar value = 0;
  int points = 0;
  Scalar last_change = 0;
};

/// Trapezoid approximation of the counterclockwise line integral of the
/// field, doubling the point count until two passes agree to `tol`.
template <typename Scalar>
CirculationResult<Scalar> circulation(const FieldSampler<Scalar>& field, const Contour<Scalar>& contour,
                                      int n = 64, Scalar tol = Scalar(1e-8), int max_points = 1 << 20) {
  if (n < 64) throw DomainError("circulation needs at least 64 points");
  auto pass = [&](int count, int stride_offset, int stride) {
    Scalar s = 0;
    for (int k = stride_offset; k < count; k += stride) {
      const Scalar t = Scalar(k) / count;
      s += (std::conj(field(contour.point(t))) * contour.velocity(t)).real();
    }
    return s;
  };
  Scalar sum = pass(n, 0, 1);
  Scalar value = sum / n;
  for (int count = 2 * n; count <= max_points; count *= 2) {
    sum += pass(count, 1, 2);  // reuse the previous nodes
    const Scalar next = sum / count;
    const Scalar change = std::abs(next - value);
    value = next;
    if (change <= tol) return {value, count, change};
  }
  throw QuadratureError("circulation did not converge");
}

namespace detail {
template <typename Scalar>
void check_stencil(const ObstacleFamily<Scalar>* guard, const Complex<Scalar>& x, Scalar h) {
  if (guard == nullptr) return;
  const Complex<Scalar> pts[] = {x + h, x - h, x + Complex<Scalar>(0, h), x - Complex<Scalar>(0, h)};
  for (const auto& p : pts)
    if (!guard->exterior(p)) throw DomainError("probe stencil leaves the flow domain");
  // The vertical pair straddles the plate if it crosses the cut.
  if (std::abs(x.real()) <= 1 && std::abs(x.imag()) <= h)
    throw DomainError("probe stencil crosses the curve");
}
}  // namespace detail

/// Centered-difference divergence with step h.
template <typename Scalar>
Scalar divergence_probe(const FieldSampler<Scalar>& field, const Complex<Scalar>& x, Scalar h,
                        const ObstacleFamily<Scalar>* guard = nullptr) {
  detail::check_stencil(guard, x, h);
  const Complex<Scalar> ih(0, h);
  return (field(x + h).real() - field(x - h).real()) / (2 * h) +
         (field(x + ih).imag() - field(x - ih).imag()) / (2 * h);
}

/// Centered-difference curl (d1 u2 - d2 u1) with step h.
template <typename Scalar>
Scalar curl_probe(const FieldSampler<Scalar>& field, const Complex<Scalar>& x, Scalar h,
                  const ObstacleFamily<Scalar>* guard = nullptr) {
  detail::check_stencil(guard, x, h);
  const Complex<Scalar> ih(0, h);
  return (field(x + h).imag() - field(x - h).imag()) / (2 * h) -
         (field(x + ih).real() - field(x - ih).real()) / (2 * h);
}

/// Axis-aligned sampling box.
template <typename Scalar>
struct Box {
  Scalar x_min, x_max, y_min, y_max;
  Scalar area() const { return (x_max - x_min) * (y_max - y_min); }
};

/// R * |{ |u| > R } intersected with the box|^{1/2}. The exceedance area is
/// measured on a base grid refined as a quadtree wherever the cell straddles
/// the threshold, or the magnitude is steep there and still growing from the
/// parent cell. The second rule follows point singularities down to
/// `min_cell` but stops along jump lines, where the maximum saturates.
template <typename Scalar>
Scalar smallness_statistic(const FieldSampler<Scalar>& field, Scalar threshold, const Box<Scalar>& box,
                           int base_cells = 128, Scalar min_cell = Scalar(1e-7)) {
  if (!(threshold > 0)) throw DomainError("smallness threshold must be positive");
  const Scalar hx = (box.x_max - box.x_min) / base_cells;
  const Scalar hy = (box.y_max - box.y_min) / base_cells;
  Scalar area = 0;
  std::function<void(Scalar, Scalar, Scalar, Scalar, Scalar)> visit = [&](Scalar x0, Scalar y0, Scalar w,
                                                                      Scalar h, Scalar parent_hi) {
    Scalar mags[4];
    int above = 0;
    Scalar lo = std::numeric_limits<Scalar>::max(), hi = 0;
    for (int k = 0; k < 4; ++k) {
      const Complex<Scalar> p(x0 + w * (k % 2 == 0 ? Scalar(0.25) : Scalar(0.75)),
                              y0 + h * (k / 2 == 0 ? Scalar(0.25) : Scalar(0.75)));
      mags[k] = std::abs(field(p));
      lo = std::min(lo, mags[k]);
      hi = std::max(hi, mags[k]);
      if (mags[k] > threshold) ++above;
    }
    const bool mixed = above > 0 && above < 4;
    const bool steep = hi > Scalar(1.5) * lo && hi > threshold / 64 && hi > Scalar(1.2) * parent_hi;
    if ((mixed || steep) && std::max(w, h) > min_cell) {
      const Scalar w2 = w / 2, h2 = h / 2;
      visit(x0, y0, w2, h2, hi);
      visit(x0 + w2, y0, w2, h2, hi);
      visit(x0, y0 + h2, w2, h2, hi);
      visit(x0 + w2, y0 + h2, w2, h2, hi);
      return;
    }
    area += w * h * above / 4;
  };
  for (int i = 0; i < base_cells; ++i)
    for (int j = 0; j < base_cells; ++j) visit(box.x_min + i * hx, box.y_min + j * hy, hx, hy, Scalar(0));
  return threshold * std::sqrt(area);
}

}  // namespace thinflow
