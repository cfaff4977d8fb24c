#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "thinflow/assumption.hpp"
#include "thinflow/conformal.hpp"
#include "thinflow/quadrature.hpp"
#include "support.hpp"

using namespace thinflow;
using C = std::complex<double>;
using thinflow::testing::fit_slope;

namespace {

// Random point off the plate with |z| spread over many decades.
C random_exterior(std::mt19937_64& rng, double max_radius = 1e6) {
  std::uniform_real_distribution<double> u(0, 1);
  for (;;) {
    const double r = std::pow(10.0, -2 + (std::log10(max_radius) + 2) * u(rng));
    const C z = std::polar(r, 2 * std::numbers::pi * u(rng));
    if (std::abs(z.imag()) > 1e-3 || std::abs(z.real()) > 1.001) return z;
  }
}

int winding_number(const std::vector<C>& polygon, const C& p) {
  double total = 0;
  for (std::size_t k = 0; k < polygon.size(); ++k) {
    const C a = polygon[k] - p, b = polygon[(k + 1) % polygon.size()] - p;
    total += std::arg(b / a);
  }
  return static_cast<int>(std::lround(total / (2 * std::numbers::pi)));
}

}  // namespace

TEST_CASE("complex identification matches the 2x2 matrix form") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int k = 0; k < 200; ++k) {
    const C d(g(rng), g(rng)), v(g(rng), g(rng));
    const Vec2<double> vv = to_vec(v);
    const double scale = std::abs(d) * std::abs(v);
    CHECK(std::abs(to_complex<double>(jacobian_matrix(d) * vv) - d * v) <= 1e-12 * scale);
    CHECK(std::abs(to_complex<double>(jacobian_matrix(d).transpose() * vv) - std::conj(d) * v) <=
          1e-12 * scale);
    CHECK(std::abs(to_complex<double>(perp_matrix<double>() * vv) - perp(v)) <= 1e-12 * std::abs(v));
    CHECK(perp(v) == C(0, 1) * v);
  }
}

TEST_CASE("segment map: values, branch and domain errors") {
  const SegmentMap<double> map;
  CHECK(map.eval(C(1, 0)) == C(1, 0));
  CHECK(map.eval(C(-1, 0)) == C(-1, 0));

  const C w = map.eval(C(2, 0));
  CHECK(w.real() == doctest::Approx(2 + std::sqrt(3.0)).epsilon(1e-15));
  CHECK(std::abs(w.imag()) < 1e-15);
  CHECK(std::abs((w + 1.0 / w) / 2.0 - C(2, 0)) < 1e-14);

  // Approaching (0.5, 0) from above lands on the unit circle at 0.5 + i sqrt(0.75).
  const C above = map.eval(C(0.5, 1e-13));
  CHECK(std::abs(above - C(0.5, std::sqrt(0.75))) < 1e-12);
  const auto tr = map.trace_at(0.5, Side::above);
  CHECK(std::abs(std::abs(tr.value) - 1) < 1e-12);
  CHECK(std::abs(tr.value - C(0.5, std::sqrt(0.75))) < 1e-15);

  CHECK_THROWS_AS(map.eval(C(0.5, 0)), BranchError);
  CHECK_THROWS_AS(map.eval(C(0, 0)), BranchError);
  CHECK_THROWS_AS(map.deriv(C(1, 0)), SingularityError);
  CHECK_THROWS_AS(map.deriv(C(-1, 0)), SingularityError);
  CHECK_THROWS_AS(map.inverse(C(0.5, 0.2)), DomainError);
}

TEST_CASE("segment map: modulus > 1 off the plate, round trip") {
  const SegmentMap<double> map;
  std::mt19937_64 rng(11);
  for (int k = 0; k < 1000; ++k) {
    const C z = random_exterior(rng);
    const C w = map.eval(z);
    CHECK(std::abs(w) > 1);
    CHECK(std::abs(map.inverse(w) - z) <= 1e-12 * std::abs(z));
  }
  CHECK(map.inverse(C(1, 0)) == C(1, 0));
  CHECK(std::abs(map.inverse(C(2 + std::sqrt(3.0), 0)) - C(2, 0)) < 1e-14);
  for (double theta : {0.1, 1.0, 2.5, 4.0}) {
    const C z = map.inverse(std::polar(1.0, theta));
    CHECK(std::abs(z - C(std::cos(theta), 0)) < 1e-15);
  }
}

TEST_CASE("segment map: derivative against finite differences and asymptotics") {
  const SegmentMap<double> map;
  const double expected = 1 + 2 / std::sqrt(3.0);
  CHECK(map.deriv(C(2, 0)).real() == doctest::Approx(expected).epsilon(1e-15));
  const double h = 1e-6;
  const C fd = (map.eval(C(2 + h, 0)) - map.eval(C(2 - h, 0))) / (2 * h);
  CHECK(std::abs(fd - map.deriv(C(2, 0))) <= 1e-6 * expected);

  // Inverse square-root blow-up at the endpoint.
  std::vector<double> lx, ly;
  for (int k = 0; k <= 30; ++k) {
    const double d = std::pow(10.0, -6 + 3.0 * k / 30);
    lx.push_back(std::log(d));
    ly.push_back(std::log(std::abs(map.deriv(C(1 + d, 0)))));
  }
  CHECK(std::abs(fit_slope(lx, ly) + 0.5) < 0.01);
  CHECK(std::abs(map.deriv(C(1 + 1e-10, 0))) * std::sqrt(1e-10) ==
        doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-4));

  CHECK(std::abs(map.deriv(C(1e7, 3e6)) - C(2, 0)) < 1e-12);

  // Second derivative against differences of the first.
  const C z(0.3, 0.7);
  const C fd2 = (map.deriv(z + h) - map.deriv(z - h)) / (2 * h);
  CHECK(std::abs(fd2 - map.second_deriv(z)) < 1e-7);
}

TEST_CASE("segment map: holomorphy and far-field coefficient") {
  const SegmentMap<double> map;
  std::mt19937_64 rng(3);
  const double h = 1e-5;
  for (int k = 0; k < 200; ++k) {
    const C z = random_exterior(rng, 10);
    if (std::abs(z.imag()) < 10 * h && std::abs(z.real()) < 1 + 10 * h) continue;
    const C dx = (map.eval(z + h) - map.eval(z - h)) / (2 * h);
    const C dy = (map.eval(z + C(0, h)) - map.eval(z - C(0, h))) / (2 * h);
    // Cauchy-Riemann: d/dy = i d/dx.
    const double scale = std::max(1.0, std::abs(map.deriv(z)));
    CHECK(std::abs(dy - C(0, 1) * dx) <= 1e-6 * scale);
  }

  // Least-squares fit of T(z) = beta z + b over |z| in [1e2, 1e4].
  double num = 0, den = 0;
  for (int k = 0; k <= 40; ++k) {
    const double r = std::pow(10.0, 2 + 2.0 * k / 40);
    for (int j = 0; j < 16; ++j) {
      const C z = std::polar(r, 2 * std::numbers::pi * (j + 0.5) / 16);
      num += (std::conj(z) * map.eval(z)).real();
      den += std::norm(z);
    }
  }
  CHECK(std::abs(num / den - SegmentMap<double>::farfield_beta) < 1e-3);
}

namespace {

// Contribution of the neighbourhood of one endpoint to int |T'|^p dx,
// written in the mapped plane as int |T'|^{p-2} dw over {|w| > 1, |w - 1| < 1/2}
// in polar coordinates centred on the tip image w = 1, graded geometrically
// towards it. Away from the tips |T'| is bounded, so these terms decide
// local integrability.
double tip_power_integral(double p, int levels) {
  const auto& rule = gauss_legendre<double>(12);
  std::vector<double> r_breaks{0.0};
  for (int l = levels; l >= 1; --l) r_breaks.push_back(0.5 * std::pow(0.1, l));
  r_breaks.push_back(0.5);
  double total = 0;
  for (std::size_t a = 0; a + 1 < r_breaks.size(); ++a) {
    const double r0 = r_breaks[a], r1 = r_breaks[a + 1];
    for (int i = 0; i < 12; ++i) {
      const double r = r0 + (r1 - r0) * (rule.nodes(i) + 1) / 2;
      const double phi_max = std::numbers::pi / 2 + std::asin(r / 2);
      double inner = 0;
      for (int j = 0; j < 12; ++j) {
        const double phi = phi_max * rule.nodes(j);
        const C w = 1.0 + std::polar(r, phi);
        const double dt = 2 * std::norm(w) / std::abs(w * w - 1.0);
        inner += rule.weights(j) * phi_max * std::pow(dt, p - 2) * r;
      }
      total += rule.weights(i) * (r1 - r0) / 2 * inner;
    }
  }
  return total;
}

}  // namespace

TEST_CASE("segment map: derivative is locally L^p for p < 4") {
  for (double p : {3.0, 3.9}) {
    const double coarse = tip_power_integral(p, 100);
    const double fine = tip_power_integral(p, 150);
    CHECK(std::isfinite(fine));
    CHECK(std::abs(fine - coarse) <= 1e-4 * fine);
  }
  // At p = 4 every grading level adds a fixed amount: divergent.
  const double a = tip_power_integral(4.0, 20);
  const double b = tip_power_integral(4.0, 40);
  CHECK(b - a > 0.5 * a);
}

TEST_CASE("obstacle family") {
  const ObstacleFamily<double> zero(0.0);
  const SegmentMap<double> base;
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const C z = random_exterior(rng, 100);
    CHECK(zero.eval(z) == base.eval(z));
    CHECK(zero.deriv(z) == base.deriv(z));
  }

  const ObstacleFamily<double> fam(0.1);
  const C w = fam.eval(C(2, 0));
  CHECK(w.real() == doctest::Approx((2 + std::sqrt(3.0)) / 1.1).epsilon(1e-15));
  CHECK(w.real() == doctest::Approx(3.3927735).epsilon(1e-7));
  CHECK(std::abs(fam.inverse(w) - C(2, 0)) < 1e-14);
  CHECK(std::abs(fam.deriv(C(2, 0)) - base.deriv(C(2, 0)) / 1.1) < 1e-15);

  const C on_boundary = fam.inverse(C(1, 0));
  CHECK(std::abs(std::abs(base.eval(on_boundary)) - 1.1) < 1e-12);
  CHECK(std::abs(std::abs(fam.eval(on_boundary)) - 1) < 1e-12);

  CHECK_THROWS_AS(fam.eval(C(0, 0.01)), DomainError);
  CHECK_THROWS_AS(fam.inverse(C(0.5, 0)), DomainError);
}

TEST_CASE("boundary sampling") {
  const ObstacleFamily<double> fam(0.1);
  const SegmentMap<double> base;
  const auto four = boundary_sample(fam, 4);
  REQUIRE(four.size() == 4);
  for (const auto& z : four) CHECK(std::abs(std::abs(base.eval(z)) - 1.1) < 1e-12);

  for (int n : {4, 64}) {
    const auto poly = boundary_sample(fam, n);
    CHECK(winding_number(poly, C(1, 0)) == 1);
    CHECK(winding_number(poly, C(-1, 0)) == 1);
  }

  auto max_gap = [](double eps) {
    double d = 0;
    for (const auto& z : boundary_sample(ObstacleFamily<double>(eps), 256)) {
      const double dx = std::max(std::abs(z.real()) - 1, 0.0);
      d = std::max(d, std::hypot(dx, z.imag()));
    }
    return d;
  };
  CHECK(max_gap(0.01) < max_gap(0.1));
  CHECK_THROWS_AS(boundary_sample(fam, 3), DomainError);
  CHECK_THROWS_AS(boundary_sample(ObstacleFamily<double>(0.0), 8), DomainError);
}

TEST_CASE("one-sided traces") {
  const SegmentMap<double> map;
  const auto up = one_sided_map_trace(map, 0.5, Side::above);
  const auto down = one_sided_map_trace(map, 0.5, Side::below);
  CHECK(std::abs(up.value - C(0, 1)) < 1e-15);
  CHECK(std::abs(up.deriv - C(1, 0)) < 1e-15);
  CHECK(std::abs(down.value - C(0, -1)) < 1e-15);

  for (double offset : {1e-4, 1e-6}) {
    CHECK(std::abs(map.deriv(C(0, offset)) - up.deriv) < 2 * offset);
    CHECK(std::abs(map.deriv(C(0, -offset)) - down.deriv) < 2 * offset);
  }
  for (int k = 1; k <= 10; ++k) {
    const double s = k / 11.0;
    const auto a = map.trace(s, Side::above), b = map.trace(s, Side::below);
    CHECK(std::abs(std::abs(a.value) - 1) < 1e-12);
    CHECK(std::abs(std::abs(b.value) - 1) < 1e-12);
    CHECK(std::abs(a.value - std::conj(b.value)) < 1e-15);
    const double x = map.arc().point(s).real();
    CHECK(std::abs(map.deriv(C(x, 1e-7)) - a.deriv) < 1e-5 * std::abs(a.deriv));
  }
  CHECK_THROWS_AS(map.trace(0.0, Side::above), SingularityError);
  CHECK_THROWS_AS(map.trace(1.0, Side::below), SingularityError);
}

TEST_CASE("assumption suite for the homothetic family") {
  const auto report = assumption_check({0.2, 0.1, 0.05}, 4.0);
  REQUIRE(report.rows.size() == 3);
  for (const auto& row : report.rows) {
    CHECK(std::abs(row.sup_relative_deviation - row.eps / (1 + row.eps)) < 1e-12);
    CHECK(row.sup_inverse_jacobian < 2);
    CHECK(row.sup_derivative_outside < 3);
    CHECK(row.sup_scaled_hessian < 1);
    CHECK(row.sleeve_area_excluded >= 0);
  }
  CHECK(report.rows[1].sup_relative_deviation == doctest::Approx(1.0 / 11).epsilon(1e-12));
  CHECK(report.relative_deviation_decreasing);
  CHECK(report.l3_gap_decreasing);
  CHECK_THROWS_AS(assumption_check({0.1, 0.2}, 4.0), DomainError);
  CHECK_THROWS_AS(assumption_check({0.1}, 3.0), DomainError);
}
