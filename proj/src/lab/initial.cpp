#include <cmath>
#include <limits>

#include "common.hpp"
#include "thinflow/fields.hpp"
#include "thinflow/norms.hpp"
#include "thinflow/parallel.hpp"

namespace thinflow::lab {

namespace {

std::vector<Point> sample(const FieldSet<double>& fs, const std::vector<Point>& nodes) {
  std::vector<Point> out(nodes.size());
  parallel_for(nodes.size(), [&](std::size_t k) { out[k] = fs.initial_extended(nodes[k]); });
  return out;
}

}  // namespace

Table initial_data_convergence(const std::vector<double>& eps_list, const ProbePatch<double>& patch,
                               const FlowData<double>& flow) {
  const auto nodes = patch.nodes();
  const auto limit = sample(FieldSet<double>(flow, ObstacleFamily<double>(0)), nodes);
  Table tab{{"eps", "distance", "ratio"}, {}};
  double prev = 0;
  for (double eps : eps_list) {
    const double d = l2_patch_distance(patch, sample(FieldSet<double>(flow, ObstacleFamily<double>(eps)), nodes), limit);
    tab.add({eps, d, prev > 0 && d > 0 ? Json(prev / d) : Json(nullptr)});
    prev = d;
  }
  return tab;
}

LpBound lp_uniform_bound(const std::vector<double>& eps_list, double p, double radius, const FlowData<double>& flow,
                         double ratio) {
  if (!(p >= 2 && p <= 3)) throw ConfigError("lp_uniform_bound needs p in [2, 3]");
  if (!(radius >= 2)) throw ConfigError("lp_uniform_bound needs a ball radius >= 2");
  LpBound out;
  out.table = Table{{"eps", "p", "radius", "ball", "tail_bound", "norm", "decay_exponent"}, {}};
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (double eps : eps_list) {
    const FieldSet<double> fs(flow, ObstacleFamily<double>(eps));
    Sampler u = [&](const Point& x) { return fs.initial_extended(x); };
    const auto ball = mapped_lp_norm(u, fs.family(), p, radius, true);
    const auto full = mapped_lp_norm(u, fs.family(), p, radius, false);
    auto finite = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    out.table.add({eps, p, radius, ball.truncated, finite(full.tail_bound), finite(full.value), full.decay_exponent});
    if (!std::isfinite(full.value)) out.divergent = true;
    lo = std::min(lo, full.value);
    hi = std::max(hi, full.value);
  }
  out.uniform = !out.divergent && (hi == 0 || hi <= ratio * lo);
  return out;
}

ConvergenceReport criterion_7(const StudyConfig& cfg, const std::map<std::string, double>& tol) {
  detail::Stopwatch clock;
  ConvergenceReport r;
  auto tab = initial_data_convergence(cfg.eps_list, cfg.patch, cfg.flow);
  std::vector<double> d;
  for (const auto& row : tab.rows) d.push_back(row[1].get<double>());
  const bool ok = detail::decreasing(d);
  r.tables["initial_convergence"] = tab;
  r.criteria.push_back(detail::judge("C7", "||E u0^eps - u0|| on the patch strictly decreases along eps", ok,
                                     d.back(), 0, "distances " + detail::join(d),
                                     clock.seconds(), 120));

  // Far from the obstacle the fields already agree at the largest eps.
  const double t_far = detail::tolerance(tol, "initial_far_patch");
  ProbePatch<double> far{5, 7, 5, 7, cfg.patch.delta, 32};
  const auto far_tab = initial_data_convergence({cfg.eps_list.front()}, far, cfg.flow);
  const double dfar = far_tab.rows.front()[1].get<double>();
  r.tables["initial_far_patch"] = far_tab;
  r.criteria.push_back(detail::judge("initial.far_patch", "patch [5,7]^2: distance below tolerance at the largest eps",
                                     dfar <= t_far, dfar, t_far, "", 0, 0));
  return r;
}

}  // namespace thinflow::lab
