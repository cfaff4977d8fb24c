#include <cmath>
#include <numbers>

#include "common.hpp"
#include "thinflow/run.hpp"

namespace thinflow::lab {

namespace {

constexpr double pi = std::numbers::pi;

// Observed orders log2(e_k / e_{k+1}) of an error sequence under doubling.
std::vector<double> orders(const std::vector<double>& e) {
  std::vector<double> out;
  for (std::size_t k = 1; k < e.size(); ++k) out.push_back(std::log2(e[k - 1] / e[k]));
  return out;
}

double min_of(const std::vector<double>& v) {
  double m = std::numeric_limits<double>::infinity();
  for (double x : v) m = std::min(m, x);
  return m;
}

}  // namespace

ConvergenceReport criterion_8(const std::map<std::string, double>& tol) {
  detail::Stopwatch clock;
  ConvergenceReport r;
  const double t_carrier = detail::tolerance(tol, "poisson_carrier");
  const double t_order = detail::tolerance(tol, "order_min");

  // Zero data for 100 steps.
  bool zero_ok = true;
  {
    const auto g = build_grid<double>(0.1, 64, 128);
    const PoissonSolver<double> ps(g);
    auto s = init_state(g, FlowData<double>{}, ps);
    SolverConfig<double> cfg;
    const Stepper<double> stepper{g, ps, cfg};
    for (int k = 0; k < 100; ++k) stepper.advance(s, 1e-3);
    zero_ok = (s.w == 0).all() && (s.psi == 0).all() && s.beta == 0;
  }

  // Pure circulation: psi = alpha sigma / (2 pi).
  double carrier = 0;
  {
    const auto g = build_grid<double>(0.1, 64, 128);
    const PoissonSolver<double> ps(g);
    SolverState<double> s;
    s.w = GridArray<double>::Zero(g.n_sigma, g.n_theta);
    s.alpha = 1;
    poisson_streamfunction(s, g, ps);
    for (int i = 0; i < g.n_sigma; ++i)
      carrier = std::max(carrier, (s.psi.row(i) - g.sigma(i) / (2 * pi)).abs().maxCoeff());
  }

  // Manufactured Poisson solution sin(pi s / S)(cos t + sin 2t).
  Table tab{{"operator", "n_sigma", "n_theta", "max_error", "order", "tolerance"}, {}};
  std::vector<double> pe;
  const std::vector<int> pn{32, 64, 128, 256};
  for (int n : pn) {
    const auto g = build_grid<double>(0.1, n, n);
    const PoissonSolver<double> ps(g);
    const double k = pi / g.sigma_max;
    GridArray<double> rhs(g.n_sigma, g.n_theta), exact(g.n_sigma, g.n_theta), psi;
    for (int i = 0; i < g.n_sigma; ++i)
      for (int j = 0; j < g.n_theta; ++j) {
        const double sg = g.sigma(i), th = g.theta(j);
        exact(i, j) = std::sin(k * sg) * (std::cos(th) + std::sin(2 * th));
        rhs(i, j) = -k * k * exact(i, j) - std::sin(k * sg) * (std::cos(th) + 4 * std::sin(2 * th));
      }
    ps.solve(rhs, psi);
    pe.push_back((psi - exact).abs().maxCoeff());
  }
  const auto po = orders(pe);
  for (std::size_t k = 0; k < pn.size(); ++k)
    tab.add({"poisson", pn[k], pn[k], pe[k], k ? Json(po[k - 1]) : Json(nullptr), t_order});

  // Diffusion operator nu g (D_ss + D_tt) against the physical Laplacian of
  // exp(-|x - c|^2), where it is (4 |x - c|^2 - 4) f.
  std::vector<double> de;
  const std::vector<int> dn{128, 256, 512};
  const Point c(0.3, 0.8);
  for (int n : dn) {
    const auto g = build_grid<double>(0.2, n, 2 * n);
    GridArray<double> f(g.n_sigma, g.n_theta);
    for (int i = 0; i < g.n_sigma; ++i)
      for (int j = 0; j < g.n_theta; ++j) f(i, j) = std::exp(-std::norm(g.x(i, j) - c));
    double err = 0;
    const int m = g.n_theta;
    for (int i = 1; i < g.n_sigma - 1; ++i)
      for (int j = 0; j < m; ++j) {
        const double q = std::norm(g.x(i, j) - c);
        if (q > 4) continue;
        const double lap = (f(i + 1, j) - 2 * f(i, j) + f(i - 1, j)) / (g.d_sigma * g.d_sigma) +
                           (f(i, (j + 1) % m) - 2 * f(i, j) + f(i, (j + m - 1) % m)) / (g.d_theta * g.d_theta);
        err = std::max(err, std::abs(g.factor(i, j) * lap - (4 * q - 4) * f(i, j)));
      }
    de.push_back(err);
  }
  const auto dor = orders(de);
  for (std::size_t k = 0; k < dn.size(); ++k)
    tab.add({"diffusion", dn[k], 2 * dn[k], de[k], k ? Json(dor[k - 1]) : Json(nullptr), t_order});
  r.tables["manufactured"] = tab;

  const double worst_order = std::min(min_of(po), min_of(dor));
  const bool ok = zero_ok && carrier <= t_carrier && worst_order >= t_order;
  r.criteria.push_back(detail::judge("C8", "zero data fixed, circulation carrier exact, operators second order", ok,
                                     worst_order, t_order,
                                     std::string("zero state ") + (zero_ok ? "exact" : "drifted") +
                                         ", carrier error " + detail::fmt(carrier) + ", poisson orders " +
                                         detail::join(po) + ", diffusion orders " + detail::join(dor),
                                     clock.seconds(), 120));
  return r;
}

ConvergenceReport criterion_9(const StudyConfig& cfg, const std::map<std::string, double>& tol) {
  detail::Stopwatch clock;
  ConvergenceReport r;
  const double t_stokes = detail::tolerance(tol, "stokes_defect");
  const double t_far = detail::tolerance(tol, "far_circulation");
  const double eps = cfg.eps_list.size() > 1 ? cfg.eps_list[1] : cfg.eps_list.front();
  const auto g = build_grid<double>(eps, cfg.rung.n_sigma, cfg.rung.n_theta, cfg.r_max);
  const PoissonSolver<double> ps(g);
  auto s = init_state(g, cfg.flow, ps, cfg.closure);
  SolverConfig<double> sc;
  sc.nu = cfg.flow.nu;
  sc.dt = cfg.rung.dt;
  sc.t_end = cfg.t_energy;
  sc.snapshot_dt = cfg.snapshot_dt;
  sc.closure = cfg.closure;
  RunOptions<double> opt;
  opt.profile = CutoffProfile<double>(cfg.lambda);
  opt.c1 = detail::tolerance(tol, "envelope_c1");
  opt.envelope_margin = detail::tolerance(tol, "envelope_margin");
  ProbePatch<double> patch = cfg.patch;
  patch.n = 8;  // snapshots are not used here
  const auto rec = simulate(s, g, ps, sc, patch, opt);

  Table tab{{"t", "energy", "grad_energy", "beta", "circ_far", "envelope_lhs", "envelope_rhs"}, {}};
  double far = 0;
  for (const auto& d : rec.diagnostics) {
    far = std::max(far, std::abs(d.circ_far - rec.alpha));
    tab.add({d.t, d.energy, d.grad_energy, d.beta, d.circ_far, d.envelope_lhs, d.envelope_rhs});
  }
  r.tables["energy"] = tab;
  const bool ok = rec.max_stokes_defect <= t_stokes && far <= t_far && rec.envelope_held;
  r.criteria.push_back(detail::judge(
      "C9", "circulation bookkeeping, far circulation and energy envelope over [0, t_energy]", ok,
      rec.max_stokes_defect, t_stokes,
      "eps " + detail::fmt(eps) + ", far circulation error " + detail::fmt(far) + " (tol " + detail::fmt(t_far) +
          "), envelope " + (rec.envelope_held ? "held" : "violated") + ", " + std::to_string(rec.steps) + " steps",
      clock.seconds(), 300));
  return r;
}

}  // namespace thinflow::lab
