#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "thinflow/fields.hpp"
#include "thinflow/norms.hpp"
#include "thinflow/probes.hpp"
#include "thinflow/reference.hpp"

using namespace thinflow;
using C = std::complex<double>;
using thinflow::testing::fit_slope;

namespace {

constexpr double pi = std::numbers::pi;

FlowData<double> circulation_only(double gamma) {
  FlowData<double> flow;
  flow.gamma = gamma;
  return flow;
}

// Points in [-3,3]^2 comfortably outside Omega_eps and away from the bumps' edges.
std::vector<C> scattered_points(const ObstacleFamily<double>& fam, int count, unsigned seed,
                                double min_modulus = 1.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<C> pts;
  while (static_cast<int>(pts.size()) < count) {
    const C z(u(rng), u(rng));
    if (std::abs(z.imag()) < 0.2 && std::abs(z.real()) < 1.2) continue;
    if (std::abs(fam.eval(z)) < min_modulus) continue;
    pts.push_back(z);
  }
  return pts;
}

double circle_max(const FieldSampler<double>& f, double r) {
  double m = 0;
  for (int k = 0; k < 64; ++k) m = std::max(m, std::abs(f(std::polar(r, 2 * pi * (k + 0.5) / 64))));
  return m;
}

double decay_slope(const FieldSampler<double>& f, std::initializer_list<double> radii) {
  std::vector<double> lx, ly;
  for (double r : radii) {
    lx.push_back(std::log(r));
    ly.push_back(std::log(circle_max(f, r)));
  }
  return fit_slope(lx, ly);
}

// Induced velocity at a fixed quadrature order plus the harmonic part, so
// finite differences see a field that is smooth in x to roundoff.
FieldSampler<double> fixed_order_initial(const FieldSet<double>& fs, int order) {
  return [&fs, order](const C& x) {
    return fs.induced_velocity().at_order(x, order) + fs.alpha() * fs.harmonic(x);
  };
}

}  // namespace

TEST_CASE("kernel: complex and matrix forms agree") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-4, 4);
  for (double eps : {0.0, 0.1}) {
    const ObstacleFamily<double> fam(eps);
    int checked = 0;
    while (checked < 100) {
      const C x(u(rng), u(rng)), y(u(rng), u(rng));
      if (!fam.exterior(x) || !fam.exterior(y) || std::abs(x - y) < 1e-3) continue;
      if (std::abs(fam.eval(y)) <= 1 + 1e-9) continue;
      const C kc = biot_savart_kernel(fam, x, y);
      const Vec2<double> km = biot_savart_kernel_matrix(fam, to_vec(x), to_vec(y));
      CHECK(std::abs(kc - to_complex(km)) <= 1e-12 * std::max(1.0, std::abs(kc)));
      const C hc = harmonic_field(fam, x);
      const Vec2<double> hm = harmonic_field_matrix(fam, to_vec(x));
      CHECK(std::abs(hc - to_complex(hm)) <= 1e-12 * std::max(1.0, std::abs(hc)));
      ++checked;
    }
  }
}

TEST_CASE("kernel: single pair against an extended-precision evaluation") {
  const ObstacleFamily<double> fam(0.1);
  const ObstacleFamily<long double> fam_l(0.1L);
  const C x(10, 0), y(0, 2);
  const C k = biot_savart_kernel(fam, x, y);
  const Vec2<long double> kl =
      biot_savart_kernel_matrix(fam_l, Vec2<long double>(10, 0), Vec2<long double>(0, 2));
  CHECK(std::abs(k.real() - static_cast<double>(kl(0))) <= 1e-12 * std::abs(k));
  CHECK(std::abs(k.imag() - static_cast<double>(kl(1))) <= 1e-12 * std::abs(k));
}

TEST_CASE("kernel: error cases") {
  const ObstacleFamily<double> fam(0.1);
  CHECK_THROWS_AS(biot_savart_kernel(fam, C(2, 1), C(2, 1)), SingularityError);
  CHECK_THROWS_AS(biot_savart_kernel(fam, C(2, 1), C(0, 0.01)), DomainError);
  const ObstacleFamily<double> plate(0);
  CHECK_THROWS_AS(biot_savart_kernel(plate, C(0.3, 0), C(2, 1)), BranchError);
}

TEST_CASE("harmonic field: unit circulation, tangency, far field") {
  for (double eps : {0.2, 0.1, 0.05}) {
    const ObstacleFamily<double> fam(eps);
    FieldSampler<double> h = [&](const C& x) { return harmonic_field(fam, x); };
    const auto res = circulation(h, Contour<double>::obstacle_boundary(fam), 4096, 1e-10);
    CHECK(res.value == doctest::Approx(1.0).epsilon(1e-6));

    const double r = fam.scale();
    for (int k = 0; k < 64; ++k) {
      const double th = 2 * pi * (k + 0.5) / 64;
      const C w = std::polar(1.0, th);
      const C tangent = (r - 1.0 / (r * w * w)) * C(0, 1) * w;
      const C normal = tangent * C(0, -1) / std::abs(tangent);
      const C hv = h(fam.boundary_point(th));
      CHECK(std::abs((std::conj(hv) * normal).real()) <= 1e-8 * std::abs(hv));
    }
    const double far = 1e3 * circle_max(h, 1e3);
    CHECK(std::abs(far - 1 / (2 * pi)) <= 0.01 / (2 * pi));
    CHECK(decay_slope(h, {50, 100, 200, 400, 800}) == doctest::Approx(-1.0).epsilon(0.05));
  }
}

TEST_CASE("induced velocity: zero vorticity, far-field decay, order doubling") {
  const ObstacleFamily<double> fam(0.1);
  const InducedVelocity<double> none(fam, BumpVorticity<double>{});
  CHECK(none(C(2, 3)) == C(0, 0));

  const auto pair = reference_bump_pair();
  CHECK(std::abs(pair.mass()) < 1e-14);
  const InducedVelocity<double> k(fam, pair);
  FieldSampler<double> f = [&](const C& x) { return k(x); };
  CHECK(std::abs(decay_slope(f, {50, 100, 200, 400, 800}) + 2) <= 0.1);

  // Probes inside, on the rim of, and outside the supports.
  std::vector<C> probes = {{-0.6, 0.6}, {0.6, 0.6}, {-0.45, 0.7}, {0.6, 0.89}, {-0.9, 0.6},
                           {0.0, 0.6},  {0.0, 1.5}, {2.0, -1.0}, {-1.5, 0.2}, {0.3, -0.4},
                           {0.62, 0.3}, {1.2, 0.6}, {-0.6, 1.2}, {5.0, 5.0}, {0.0, -2.0},
                           {-1.1, 0.0}, {1.1, 0.05}, {0.8, 0.55}, {-0.3, 0.45}, {0.59, 0.61}};
  for (const C& x : probes) {
    const C adaptive = k(x), reference = k.at_order(x, 256);
    CHECK(std::abs(adaptive - reference) <= 1e-9 * std::max(1.0, std::abs(reference)));
  }
}

TEST_CASE("induced velocity: curl recovers the vorticity inside a bump") {
  const FieldSet<double> fs(reference_flow(), ObstacleFamily<double>(0.1));
  const auto u = fixed_order_initial(fs, 64);
  const C x(-0.55, 0.65);
  const double target = fs.flow().omega0(x);
  const double e1 = std::abs(curl_probe(u, x, 1e-2) - target);
  const double e2 = std::abs(curl_probe(u, x, 5e-3) - target);
  CHECK(e2 < 1e-3 * std::abs(target));
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("probes: divergence and curl of explicit fields") {
  const ObstacleFamily<double> fam(0.1);
  const C y(0.5, 1.5);
  FieldSampler<double> kf = [&](const C& x) { return biot_savart_kernel(fam, x, y); };
  FieldSampler<double> hf = [&](const C& x) { return harmonic_field(fam, x); };
  for (const C& x : scattered_points(fam, 50, 11)) {
    if (std::abs(x - y) < 0.3) continue;
    CHECK(std::abs(divergence_probe(kf, x, 1e-4, &fam)) <= 1e-6);
    CHECK(std::abs(curl_probe(hf, x, 1e-4, &fam)) <= 1e-6);
  }
  CHECK_THROWS_AS(divergence_probe(hf, C(0.0, 0.05), 0.1, &fam), DomainError);
  const ObstacleFamily<double> plate(0);
  CHECK_THROWS_AS(curl_probe(hf, C(0.2, 1e-3), 1e-2, &plate), DomainError);
}

TEST_CASE("initial velocity: circulations and divergence") {
  const auto flow = reference_flow();
  CHECK(flow.alpha() == doctest::Approx(flow.gamma + flow.omega0.mass()));
  for (double eps : {0.2, 0.05}) {
    const FieldSet<double> fs(flow, ObstacleFamily<double>(eps));
    FieldSampler<double> u = [&](const C& x) { return fs.initial(x); };
    const auto wall = circulation(u, Contour<double>::obstacle_boundary(fs.family()), 4096, 1e-9);
    CHECK(std::abs(wall.value - flow.gamma) <= 1e-6);
    const auto far = circulation(u, Contour<double>::circle({0, 0}, 50), 1024, 1e-9);
    CHECK(std::abs(far.value - flow.alpha()) <= 1e-6);
  }

  // A second flow with nonzero mass, so gamma and alpha differ.
  FlowData<double> massive;
  massive.gamma = 0.5;
  massive.omega0 = BumpVorticity<double>({{{0.0, 1.0}, 0.4, 3.0}});
  const FieldSet<double> fs(massive, ObstacleFamily<double>(0.1));
  FieldSampler<double> u = [&](const C& x) { return fs.initial(x); };
  CHECK(massive.alpha() - massive.gamma > 0.5);
  CHECK(circulation(u, Contour<double>::obstacle_boundary(fs.family()), 4096, 1e-9).value ==
        doctest::Approx(0.5).epsilon(1e-6));
  CHECK(circulation(u, Contour<double>::circle({0, 0}, 50), 1024, 1e-9).value ==
        doctest::Approx(massive.alpha()).epsilon(1e-6));

  const FieldSet<double> ref(flow, ObstacleFamily<double>(0.1));
  const auto uf = fixed_order_initial(ref, 64);
  for (const C& x : scattered_points(ref.family(), 100, 3)) {
    const double dist = std::max(1e-3, std::min(1.0, std::abs(ref.family().eval(x)) - 1));
    const double scale = std::max(1.0, std::abs(uf(x))) / dist;
    CHECK(std::abs(divergence_probe(uf, x, 1e-4)) <= 1e-6 * scale);
  }
}

TEST_CASE("circulation: gradient fields and argument checks") {
  FieldSampler<double> grad = [](const C& x) { return C(2 * x.real(), -2 * x.imag()); };
  CHECK(std::abs(circulation(grad, Contour<double>::circle({0.3, -0.2}, 2.0)).value) <= 1e-10);
  const auto square = Contour<double>::polyline({{-2, -2}, {2, -2}, {2, 2}, {-2, 2}});
  CHECK(std::abs(circulation(grad, square).value) <= 1e-10);
  CHECK_THROWS_AS(circulation(grad, square, 32), DomainError);
}

TEST_CASE("limit velocity: endpoint blow-up and tangency") {
  const FieldSet<double> fs(reference_flow(), ObstacleFamily<double>(0));
  std::vector<double> lx, ly;
  for (double d : {1e-4, 3e-4, 1e-3, 3e-3, 1e-2}) {
    lx.push_back(std::log(d));
    ly.push_back(std::log(std::abs(fs.initial(C(1 + d, 0)))));
  }
  CHECK(std::abs(fit_slope(lx, ly) + 0.5) <= 0.05);

  for (int k = 0; k < 32; ++k) {
    const double s = (k + 0.5) / 32;
    for (Side side : {Side::above, Side::below}) {
      const C v = fs.limit_trace(s, side);
      CHECK(std::abs(v.imag()) <= 1e-8 * std::max(1.0, std::abs(v)));
    }
  }
  CHECK_THROWS_AS(fs.limit_trace(0.0, Side::above), SingularityError);
  CHECK_THROWS_AS(fs.initial(C(0.3, 0)), BranchError);
  const FieldSet<double> thick(reference_flow(), ObstacleFamily<double>(0.1));
  CHECK_THROWS_AS(thick.limit_trace(0.5, Side::above), DomainError);
}

TEST_CASE("jump density: closed form for pure circulation, offset limit, total") {
  const FieldSet<double> fs(circulation_only(1.0), ObstacleFamily<double>(0));
  CHECK(std::abs(fs.jump_density(0.5) - 1 / pi) <= 1e-3);
  CHECK(std::abs(fs.jump_density(0.25) - 1 / (pi * std::sqrt(0.75))) <= 1e-3);
  CHECK(std::abs(fs.jump_density(0.75) - 1 / (pi * std::sqrt(0.75))) <= 1e-3);

  // Traces agree with the field just off the plate.
  const FieldSet<double> ref(reference_flow(), ObstacleFamily<double>(0));
  for (double s : {0.1, 0.3, 0.5, 0.8}) {
    const double x = -1 + 2 * s, delta = 1e-7;
    const C above = ref.initial(C(x, delta)), below = ref.initial(C(x, -delta));
    CHECK(std::abs(above - ref.limit_trace(s, Side::above)) <= 1e-5);
    CHECK(std::abs(below - ref.limit_trace(s, Side::below)) <= 1e-5);
    CHECK(std::abs((below - above).real() - ref.jump_density(s)) <= 1e-5);
  }

  // int g ds = alpha, with x = cos(phi) removing the endpoint singularity.
  for (const auto* f : {&fs, &ref}) {
    auto integrand = [f](double phi) {
      const double s = (std::cos(phi) + 1) / 2;
      return f->jump_density(s) * std::sin(phi);
    };
    const double total = integrate_composite<double>(integrand, 1e-9, pi - 1e-9, 16, 16);
    CHECK(std::abs(total - f->alpha()) <= 1e-3);
  }
}

TEST_CASE("cutoff: level values and monotonicity") {
  const ObstacleFamily<double> fam(0.1);
  const CutoffProfile<double> prof(4);
  auto at_modulus = [&](double m) { return cutoff_eval(prof, fam, fam.inverse(std::polar(m, 1.2))); };
  CHECK(at_modulus(1 + prof.lambda / 2) == 0.0);
  CHECK(at_modulus(1 + 3 * prof.lambda) == 1.0);
  CHECK(at_modulus(1 + 1.5 * prof.lambda) == doctest::Approx(0.5).epsilon(1e-12));
  double prev = 0;
  for (int k = 0; k <= 200; ++k) {
    const double v = CutoffProfile<double>::phi(0.5 + 2.0 * k / 200);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK_THROWS_AS(CutoffProfile<double>(1.5), ConfigError);
}

TEST_CASE("background and shifted fields") {
  const auto flow = reference_flow();
  const FieldSet<double> fs(flow, ObstacleFamily<double>(0.1));
  FieldSampler<double> v = [&](const C& x) { return fs.background(x); };

  // Zero where |T_eps| <= 1 + lambda.
  for (const C& x : scattered_points(fs.family(), 40, 5, 1.01)) {
    if (std::abs(fs.family().eval(x)) <= 1 + fs.profile().lambda) CHECK(v(x) == C(0, 0));
  }
  // Divergence-free, including the transition annulus 5 < |T| < 9. Fourth
  // order differences keep truncation below the tolerance.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ang(0, 2 * pi), mod(4.5, 10);
  for (int k = 0; k < 100; ++k) {
    const C x = fs.family().inverse(std::polar(mod(rng), ang(rng)));
    const double h = 2e-3;
    const double d = (4 * divergence_probe(v, x, h / 2) - divergence_probe(v, x, h)) / 3;
    CHECK(std::abs(d) <= 1e-8);
  }

  // Shifted field is the difference of the other two.
  for (const C& x : scattered_points(fs.family(), 100, 21, 1.01)) {
    const C diff = fs.initial(x) - fs.background(x);
    CHECK(std::abs(fs.shifted(x) - diff) <= 1e-12 * std::max(1.0, std::abs(diff)));
  }
  FieldSampler<double> w = [&](const C& x) { return fs.shifted(x); };
  CHECK(std::abs(decay_slope(w, {50, 100, 200, 400, 800}) + 2) <= 0.1);
}

TEST_CASE("energy norms stay bounded along the obstacle family") {
  const auto flow = reference_flow();
  std::vector<double> l4, l2;
  for (double eps : {0.2, 0.1, 0.05, 0.025}) {
    const FieldSet<double> fs(flow, ObstacleFamily<double>(eps));
    FieldSampler<double> v = [&](const C& x) { return fs.background(x); };
    FieldSampler<double> w = [&](const C& x) { return fs.shifted(x); };
    const auto nv = mapped_lp_norm(v, fs.family(), 4.0, 1e3);
    const auto nw = mapped_lp_norm(w, fs.family(), 2.0, 1e3);
    CHECK(nv.tail_bound < 1e-4 * std::pow(nv.value, 4));
    CHECK(nw.tail_bound < 1e-3 * std::pow(nw.value, 2));
    l4.push_back(nv.value);
    l2.push_back(nw.value);
  }
  for (std::size_t k = 1; k < l4.size(); ++k) {
    CHECK(std::abs(l4[k] / l4[0] - 1) <= 0.1);
    CHECK(std::abs(l2[k] / l2[0] - 1) <= 0.1);
  }
}

TEST_CASE("mapped norm against a closed form") {
  // |H_eps|^2 over |T_eps| in (1, e^s) is (1/2pi) * s in mapped coordinates.
  const ObstacleFamily<double> fam(0.1);
  FieldSampler<double> h = [&](const C& x) { return harmonic_field(fam, x); };
  const double radius = 50;
  const double s_max = std::log(std::abs(fam.eval(C(radius, 0))));
  const auto n = mapped_lp_norm(h, fam, 2.0, radius);
  CHECK(n.truncated * n.truncated == doctest::Approx(s_max / (2 * pi)).epsilon(1e-10));
  CHECK(n.decay_exponent == doctest::Approx(1.0).epsilon(0.01));
  CHECK(std::isinf(n.tail_bound));
}

TEST_CASE("smallness statistic") {
  const Box<double> box{-2, 2, -2, 2};
  FieldSampler<double> bounded = [](const C& x) { return C(std::sin(x.real()), 0.5); };
  CHECK(smallness_statistic(bounded, 2.0, box) == 0.0);

  const FieldSet<double> limit(circulation_only(1.0), ObstacleFamily<double>(0));
  FieldSampler<double> u0 = [&](const C& x) {
    if (SegmentMap<double>::on_cut(x) || SegmentMap<double>::is_endpoint(x)) return C(0, 0);
    return limit.initial(x);
  };
  const double s10 = smallness_statistic(u0, 10.0, box);
  const double s20 = smallness_statistic(u0, 20.0, box);
  const double s40 = smallness_statistic(u0, 40.0, box);
  CHECK(s10 > 0);
  CHECK(s10 / s20 == doctest::Approx(2.0).epsilon(0.2));
  CHECK(s20 / s40 == doctest::Approx(2.0).epsilon(0.2));

  const FieldSet<double> thick(circulation_only(1.0), ObstacleFamily<double>(0.1));
  FieldSampler<double> ue = [&](const C& x) { return thick.initial_extended(x); };
  double sup = 0;
  for (int k = 0; k < 4096; ++k)
    sup = std::max(sup, std::abs(ue(thick.family().boundary_point(2 * pi * k / 4096))));
  CHECK(smallness_statistic(ue, 10 * sup, box) == 0.0);
  CHECK_THROWS_AS(smallness_statistic(ue, 0.0, box), DomainError);
}

TEST_CASE("bumps: mass and validation") {
  const auto pair = reference_bump_pair();
  const BumpVorticity<double> single({{{0.0, 1.0}, 0.4, 3.0}});
  for (const auto* b : {&pair, &single}) {
    CHECK(std::abs(b->mass_by_quadrature(64) - b->mass_by_quadrature(128)) <= 1e-10);
    CHECK(std::abs(b->mass_by_quadrature(128) - b->mass()) <= 1e-10);
  }
  // int_0^1 e^{1-1/v} dv = 1 - e E1(1), and E1(1) = -Ei(-1).
  CHECK(unit_bump_mass<double>() == doctest::Approx(pi * (1 + std::exp(1.0) * std::expint(-1.0))).epsilon(1e-12));
  CHECK_THROWS_AS(BumpVorticity<double>({{{0.5, 0.05}, 0.2, 1.0}}), ConfigError);
  CHECK_THROWS_AS(BumpVorticity<double>({{{0.0, 0.5}, 0.4, 1.0}}), ConfigError);
  CHECK_THROWS_AS(BumpVorticity<double>({{{3.0, 0.0}, 0.0, 1.0}}), ConfigError);
  CHECK_NOTHROW(BumpVorticity<double>({{{3.0, 0.0}, 0.5, 1.0}}));
}
