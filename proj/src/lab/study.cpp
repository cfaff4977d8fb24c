#include <cmath>

#include "common.hpp"
#include "thinflow/reference.hpp"

namespace thinflow::lab {

using detail::fmt;
using detail::join;

void StudyConfig::validate() const {
  if (eps_list.size() < 3) throw ConfigError("eps_list: needs at least 3 values");
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (!(eps_list[k] > 0)) throw ConfigError("eps_list[" + std::to_string(k) + "]: must be > 0");
    if (k && !(eps_list[k] < eps_list[k - 1])) throw ConfigError("eps_list: must be strictly decreasing");
  }
  if (ladder.size() < 2) throw ConfigError("ladder: needs at least 2 rungs");
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    const auto& r = ladder[k];
    if (r.n_sigma < 32 || r.n_theta < 32 || r.n_theta % 2)
      throw ConfigError("ladder[" + std::to_string(k) + "]: grid counts must be >= 32 with n_theta even");
    if (k && (r.n_sigma <= ladder[k - 1].n_sigma || r.n_theta <= ladder[k - 1].n_theta))
      throw ConfigError("ladder: rungs must refine");
    if (r.dt < 0) throw ConfigError("ladder[" + std::to_string(k) + "].dt: must be >= 0");
  }
  if (!(ladder_eps > 0)) throw ConfigError("ladder_eps: must be > 0");
  if (!(lambda >= 2)) throw ConfigError("lambda: must be >= 2");
  if (!(t_study > 0) || !(snapshot_dt > 0) || !(t_energy > 0)) throw ConfigError("time: values must be > 0");
  if (!(flow.nu > 0)) throw ConfigError("nu: must be > 0");
  patch.validate();
  far_patch.validate();
  for (std::size_t k = 0; k < test_fields.size(); ++k) {
    const auto& f = test_fields[k];
    if (!(f.t_start >= 0 && f.t_stop <= t_study && f.t_stop > f.t_start))
      throw ConfigError("test_fields[" + std::to_string(k) + "]: time support must lie in (0, t_study)");
  }
}

StudyConfig reference_study() {
  StudyConfig c;
  c.flow = reference_flow();
  return c;
}

double time_integrated_distance(const ProbePatch<double>& patch, const std::vector<Snapshot<double>>& a,
                                const std::vector<Snapshot<double>>& b, int stride) {
  if (a.size() != b.size() || a.empty()) throw DomainError("runs do not share their snapshot times");
  if (stride < 1 || (a.size() - 1) % stride) throw DomainError("stride must divide the snapshot count");
  double total = 0;
  for (std::size_t k = 0; k + stride < a.size(); k += stride) {
    if (std::abs(a[k].t - b[k].t) > 1e-12) throw DomainError("runs do not share their snapshot times");
    const double d0 = l2_patch_distance(patch, a[k].velocity, b[k].velocity);
    const double d1 = l2_patch_distance(patch, a[k + stride].velocity, b[k + stride].velocity);
    total += (a[k + stride].t - a[k].t) * (d0 * d0 + d1 * d1) / 2;
  }
  return std::sqrt(total);
}

RunSamples sampled_run(const StudyConfig& cfg, double eps, const Rung& rung, WallClosure closure, double t_end,
                       bool diagnostics) {
  detail::Stopwatch clock;
  RunSamples out;
  out.eps = eps;
  out.rung = rung;
  out.closure = closure;
  try {
    const auto g = build_grid<double>(eps, rung.n_sigma, rung.n_theta, cfg.r_max);
    const PoissonSolver<double> ps(g);
    auto s = init_state(g, cfg.flow, ps, closure);
    SolverConfig<double> sc;
    sc.nu = cfg.flow.nu;
    sc.dt = rung.dt;
    sc.t_end = t_end;
    sc.snapshot_dt = cfg.snapshot_dt;
    sc.closure = closure;
    RunOptions<double> opt;
    opt.profile = CutoffProfile<double>(cfg.lambda);
    opt.diagnostics = diagnostics;
    const auto far_nodes = cfg.far_patch.nodes();
    std::function<void(const SolverState<double>&)> on_snapshot = [&](const SolverState<double>& st) {
      Snapshot<double> snap;
      snap.t = st.t;
      const VelocitySampler<double> u(g, st.psi);
      snap.velocity.resize(far_nodes.size());
      parallel_for(far_nodes.size(), [&](std::size_t k) { snap.velocity[k] = u(far_nodes[k]); });
      out.far.push_back(std::move(snap));
      const auto e = energy_monitor(st, g, opt.profile);
      const double denom = std::sqrt(std::sqrt(e.energy * e.grad_energy));
      out.ladyzhenskaya.push_back(denom > 0 ? std::sqrt(std::sqrt(e.quartic)) / denom : 0.0);
    };
    out.record = simulate(s, g, ps, sc, cfg.patch, opt, on_snapshot);
    out.near = out.record.snapshots;
  } catch (const Error& e) {
    out.error = e.what();
  }
  out.seconds = clock.seconds();
  return out;
}

namespace {

Json or_null(const RunSamples& a, const RunSamples& b, double v) {
  return a.error.empty() && b.error.empty() ? Json(v) : Json(nullptr);
}

void run_table(Table& t, const RunSamples& r) {
  const bool ok = r.error.empty();
  t.add({r.eps, r.rung.n_sigma, r.rung.n_theta, to_string(r.closure), ok ? Json(r.record.steps) : Json(nullptr),
         ok ? Json(r.record.dt_min) : Json(nullptr), ok ? Json(r.record.dt_max) : Json(nullptr),
         ok ? Json(r.record.max_stokes_defect) : Json(nullptr), ok ? "ok" : "missing: " + r.error});
}

Table runs_table() {
  return {{"eps", "n_sigma", "n_theta", "closure", "steps", "dt_min", "dt_max", "stokes_defect", "status"},
          {}};
}

}  // namespace

ConvergenceReport flow_convergence(const StudyConfig& cfg, const std::map<std::string, double>& tol) {
  detail::Stopwatch clock;
  ConvergenceReport r;
  const double t_far = detail::tolerance(tol, "far_locality");
  std::vector<RunSamples> runs;
  Table rt = runs_table();
  for (double eps : cfg.eps_list) {
    runs.push_back(sampled_run(cfg, eps, cfg.rung, cfg.closure, cfg.t_study));
    run_table(rt, runs.back());
    if (!runs.back().error.empty()) r.incomplete = true;
  }
  Table tab{{"eps_a", "eps_b", "distance", "distance_far", "distance_cadence_0.02", "ratio_to_previous"}, {}};
  std::vector<double> near, far, coarse;
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
    const auto& a = runs[k];
    const auto& b = runs[k + 1];
    if (!a.error.empty() || !b.error.empty()) {
      tab.add({a.eps, b.eps, nullptr, nullptr, nullptr, nullptr});
      near.push_back(NAN);
      far.push_back(NAN);
      coarse.push_back(NAN);
      continue;
    }
    near.push_back(time_integrated_distance(cfg.patch, a.near, b.near));
    far.push_back(time_integrated_distance(cfg.far_patch, a.far, b.far));
    const int stride = (a.near.size() - 1) % 2 == 0 ? 2 : 1;
    coarse.push_back(time_integrated_distance(cfg.patch, a.near, b.near, stride));
    tab.add({a.eps, b.eps, near.back(), or_null(a, b, far.back()), coarse.back(),
             k ? Json(near[k - 1] / near.back()) : Json(nullptr)});
  }
  r.tables["flow_convergence"] = tab;
  r.tables["flow_runs"] = rt;

  // Criterion on the first three eps; the full-list flag is reported.
  const std::vector<double> head(near.begin(), near.begin() + std::min<std::size_t>(2, near.size()));
  const bool ok = head.size() == 2 && detail::decreasing(head);
  const std::vector<double> head_coarse(coarse.begin(), coarse.begin() + head.size());
  const bool ok_coarse = head_coarse.size() == 2 && detail::decreasing(head_coarse);
  const double s = clock.seconds();
  r.criteria.push_back(detail::judge(
      "C10", "time-integrated patch distances decrease along eps = " + fmt(cfg.eps_list[0]) + ", " +
                 fmt(cfg.eps_list[1]) + ", " + fmt(cfg.eps_list[2]) + " (monotone Cauchy surrogate)",
      ok, head.size() == 2 ? head[1] / head[0] : NAN, 1,
      "distances " + join(near) + "; full list " + (detail::decreasing(near) ? "decreasing" : "not decreasing"), s,
      900));
  r.criteria.push_back(detail::judge("flow.cadence_guard", "halving the snapshot cadence keeps the verdict",
                                     ok == ok_coarse, ok_coarse ? 1 : 0, 0,
                                     "distances at cadence 0.02: " + join(coarse), 0, 0));
  double locality = 0;
  for (std::size_t k = 0; k < near.size(); ++k) locality = std::max(locality, far[k] / near[k]);
  r.criteria.push_back(detail::judge("flow.far_locality", "far patch distances are 10x below the near patch",
                                     locality * t_far <= 1, locality, 1 / t_far,
                                     "max far/near ratio over eps pairs", 0, 0));
  return r;
}

ConvergenceReport ladder_study(const StudyConfig& cfg, const std::map<std::string, double>& tol) {
  detail::Stopwatch clock;
  ConvergenceReport r;
  const double t_weak = detail::tolerance(tol, "weak_ratio");
  const double t_ref = detail::tolerance(tol, "refinement_ratio");
  std::vector<RunSamples> runs;
  Table rt = runs_table();
  for (const auto& rung : cfg.ladder) {
    runs.push_back(sampled_run(cfg, cfg.ladder_eps, rung, cfg.closure, cfg.t_study));
    run_table(rt, runs.back());
    if (!runs.back().error.empty()) r.incomplete = true;
  }
  const double ladder_seconds = clock.seconds();
  const std::size_t n = runs.size();

  // Criterion 11: weak residuals under refinement.
  Table wt{{"field", "n_sigma", "n_theta", "dt", "residual", "ratio_to_previous", "tolerance"}, {}};
  bool weak_ok = !cfg.test_fields.empty();
  std::vector<double> finest_ratios;
  for (std::size_t f = 0; f < cfg.test_fields.size(); ++f) {
    double prev = NAN;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& run = runs[k];
      if (!run.error.empty()) {
        wt.add({static_cast<int>(f), run.rung.n_sigma, run.rung.n_theta, run.rung.dt, nullptr, nullptr, t_weak});
        weak_ok = false;
        prev = NAN;
        continue;
      }
      const double res = weak_residual(run.record, cfg.test_fields[f]);
      const double ratio = prev / res;
      wt.add({static_cast<int>(f), run.rung.n_sigma, run.rung.n_theta, run.rung.dt, res,
              std::isfinite(ratio) ? Json(ratio) : Json(nullptr), t_weak});
      if (k == n - 1) {
        finest_ratios.push_back(ratio);
        weak_ok = weak_ok && ratio >= t_weak;
      }
      prev = res;
    }
  }
  r.tables["weak_residual"] = wt;
  r.tables["ladder_runs"] = rt;
  double worst_ratio = INFINITY;
  for (double v : finest_ratios) worst_ratio = std::min(worst_ratio, v);
  r.criteria.push_back(detail::judge("C11", "weak-form residual drops by the tolerance factor under x2 grid/dt refinement",
                                     weak_ok, worst_ratio, t_weak,
                                     "finest-pair ratios " + join(finest_ratios) + " at eps " + fmt(cfg.ladder_eps),
                                     ladder_seconds, 600));

  // Ladyzhenskaya diagnostic: recorded, no constant asserted.
  Table lt{{"n_sigma", "n_theta", "max_ratio"}, {}};
  for (const auto& run : runs) {
    double m = 0;
    for (double v : run.ladyzhenskaya) m = std::max(m, v);
    lt.add({run.rung.n_sigma, run.rung.n_theta, run.error.empty() ? Json(m) : Json(nullptr)});
  }
  r.tables["ladyzhenskaya"] = lt;

  // Criterion 12: distances to the finest rung, and the closure variant at
  // the finest rung that still has a finer reference.
  Table ut{{"comparison", "n_sigma", "n_theta", "distance", "tolerance"}, {}};
  bool uniq_ok = false;
  double measured = NAN;
  std::string detail = "needs at least 3 ladder rungs";
  bool reliable = n >= 3;
  if (n >= 3 && !r.incomplete) {
    const auto& ref = runs.back();
    std::vector<double> d;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      d.push_back(time_integrated_distance(cfg.patch, runs[k].near, ref.near));
      ut.add({"to finest", runs[k].rung.n_sigma, runs[k].rung.n_theta, d.back(), nullptr});
    }
    const double ratio = d[n - 3] / d[n - 2];
    const auto& mid = runs[n - 2];
    const double step = time_integrated_distance(cfg.patch, mid.near, ref.near);
    const double change = time_integrated_distance(cfg.patch, runs[n - 3].near, mid.near);
    const double order = std::log2(change / step);
    // Richardson estimate of the discretization error at the middle rung.
    const double scale = order > 0 ? step / (1 - std::pow(2.0, -order)) : INFINITY;
    const auto variant = sampled_run(cfg, cfg.ladder_eps, mid.rung, cfg.variant, cfg.t_study);
    run_table(rt, variant);
    r.tables["ladder_runs"] = rt;
    if (variant.error.empty()) {
      const double dv = time_integrated_distance(cfg.patch, mid.near, variant.near);
      ut.add({std::string(to_string(cfg.closure)) + " vs " + to_string(cfg.variant), mid.rung.n_sigma,
              mid.rung.n_theta, dv, scale});
      uniq_ok = ratio >= t_ref && dv <= scale;
      measured = ratio;
      detail = "distance ratio " + fmt(ratio) + " (tol " + fmt(t_ref) + "), closure difference " + fmt(dv) +
               " vs error scale " + fmt(scale) + " (observed order " + fmt(order) + ")";
    } else {
      r.incomplete = true;
      detail = "variant run failed: " + variant.error;
    }
  }
  r.tables["uniqueness"] = ut;
  r.criteria.push_back(detail::judge("C12", "discretizations agree within the refinement-error scale and converge",
                                     uniq_ok, measured, t_ref, detail, clock.seconds(), 900, reliable));
  return r;
}

std::vector<Stage> study_stages(const StudyConfig& cfg, const std::map<std::string, double>& tol) {
  cfg.validate();
  return {
      {"C1", [tol] { return criterion_1(tol); }},
      {"C2", [cfg, tol] { return criterion_2(cfg.flow, tol); }},
      {"C3", [cfg, tol] { return criterion_3(cfg.flow, tol); }},
      {"C4", [tol] { return criterion_4(tol); }},
      {"C5", [tol] { return criterion_5(tol); }},
      {"C6", [tol] { return criterion_6(tol); }},
      {"C7", [cfg, tol] { return criterion_7(cfg, tol); }},
      {"C8", [tol] { return criterion_8(tol); }},
      {"C9", [cfg, tol] { return criterion_9(cfg, tol); }},
      {"C10", [cfg, tol] { return flow_convergence(cfg, tol); }},
      {"C11-C12", [cfg, tol] { return ladder_study(cfg, tol); }},
      {"lp", [cfg, tol] {
         ConvergenceReport r;
         const double ratio = detail::tolerance(tol, "lp_uniform_ratio");
         const auto l3 = lp_uniform_bound({cfg.eps_list[0], cfg.eps_list[1], cfg.eps_list[2]}, 3, 50, cfg.flow, ratio);
         r.tables["lp_bound_p3"] = l3.table;
         r.criteria.push_back(detail::judge("lp.uniform_p3", "L^3 norms of E u0^eps within the tolerance factor across eps",
                                            l3.uniform, 0, ratio, "", 0, 0));
         r.tables["lp_bound_p2"] = lp_uniform_bound({cfg.eps_list[0]}, 2, 50, cfg.flow).table;
         return r;
       }},
  };
}

ConvergenceReport full_study(const StudyConfig& cfg, const std::map<std::string, double>& tol) {
  ConvergenceReport r;
  r.tolerances = tol;
  for (const auto& stage : study_stages(cfg, tol)) r.merge(stage.run());
  return r;
}

}  // namespace thinflow::lab
