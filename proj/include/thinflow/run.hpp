#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "thinflow/diagnostics.hpp"
#include "thinflow/patch.hpp"
#include "thinflow/solver.hpp"

namespace thinflow {

template <typename Scalar>
struct Snapshot {
  Scalar t = 0;
  std::vector<Complex<Scalar>> velocity;  ///< on ProbePatch::nodes()
};

template <typename Scalar>
struct DiagnosticRow {
  Scalar t = 0;
  Scalar energy = 0;
  Scalar grad_energy = 0;
  Scalar beta = 0;
  Scalar circ_far = 0;
  Scalar envelope_lhs = 0;
  Scalar envelope_rhs = 0;
};

template <typename Scalar>
struct RunRecord {
  SolverConfig<Scalar> config;
  ProbePatch<Scalar> patch;
  std::vector<Complex<Scalar>> nodes;
  std::vector<Snapshot<Scalar>> snapshots;
  std::vector<DiagnosticRow<Scalar>> diagnostics;
  Scalar alpha = 0;
  Scalar max_stokes_defect = 0;  ///< max |beta + mass - alpha| / max(1, |alpha|) over steps
  bool envelope_held = true;
  long steps = 0;
  Scalar dt_min = 0, dt_max = 0;
};

template <typename Scalar>
struct RunOptions {
  CutoffProfile<Scalar> profile{};
  Scalar c1 = 2;              ///< envelope growth constant
  Scalar envelope_margin = Scalar(0.1);
  bool diagnostics = true;    ///< energy diagnostics at snapshot times
};

/// Relative discrete Stokes defect of a state.
template <typename Scalar>
Scalar stokes_defect(const SolverState<Scalar>& s, const MappedGrid<Scalar>& grid) {
  return std::abs(s.beta + vorticity_mass(s.w, grid) - s.alpha) / std::max(Scalar(1), std::abs(s.alpha));
}

/// Runs from `state` to config.t_end, sampling the patch every
/// snapshot_dt. dt is either fixed by the config (it must divide
/// snapshot_dt) or chosen from cfl_target and re-planned inside an
/// interval if the flow speeds up.
template <typename Scalar>
RunRecord<Scalar> simulate(SolverState<Scalar>& state, const MappedGrid<Scalar>& grid,
                           const PoissonSolver<Scalar>& poisson, const SolverConfig<Scalar>& config,
                           const ProbePatch<Scalar>& patch, const RunOptions<Scalar>& opt = {},
                           const std::function<void(const SolverState<Scalar>&)>& on_snapshot = {}) {
  if (!(config.snapshot_dt > 0) || !(config.t_end >= 0)) throw ConfigError("snapshot_dt must be > 0");
  const long intervals = std::lround(config.t_end / config.snapshot_dt);
  if (std::abs(intervals * config.snapshot_dt - config.t_end) > 1e-9 * std::max(Scalar(1), config.t_end))
    throw ConfigError("t_end must be a multiple of snapshot_dt");
  long fixed_steps = 0;
  if (config.dt > 0) {
    fixed_steps = std::lround(config.snapshot_dt / config.dt);
    if (fixed_steps < 1 || std::abs(fixed_steps * config.dt - config.snapshot_dt) > 1e-9 * config.snapshot_dt)
      throw ConfigError("dt must divide snapshot_dt");
  }

  const Stepper<Scalar> stepper{grid, poisson, config};
  RunRecord<Scalar> rec;
  rec.config = config;
  rec.patch = patch;
  rec.nodes = patch.nodes();
  rec.alpha = state.alpha;
  rec.dt_min = std::numeric_limits<Scalar>::max();
  EnergyEnvelope<Scalar> envelope(config.nu, opt.c1, opt.envelope_margin);
  const int far_row = far_circulation_row(grid);
  const Scalar t0 = state.t;

  auto observe = [&] {
    Snapshot<Scalar> snap;
    snap.t = state.t;
    const VelocitySampler<Scalar> u(grid, state.psi);
    snap.velocity.resize(rec.nodes.size());
    parallel_for(rec.nodes.size(), [&](std::size_t k) { snap.velocity[k] = u(rec.nodes[k]); });
    rec.snapshots.push_back(std::move(snap));
    if (opt.diagnostics) {
      DiagnosticRow<Scalar> row;
      row.t = state.t;
      const auto e = energy_monitor(state, grid, opt.profile);
      row.energy = e.energy;
      row.grad_energy = e.grad_energy;
      row.beta = state.beta;
      row.circ_far = layer_circulation(state.psi, grid, far_row);
      if (envelope.record(state.t - t0, e) > 0) rec.envelope_held = false;
      row.envelope_lhs = envelope.lhs();
      row.envelope_rhs = envelope.rhs();
      rec.diagnostics.push_back(row);
    }
    if (on_snapshot) on_snapshot(state);
  };

  rec.max_stokes_defect = stokes_defect(state, grid);
  observe();
  // Auto mode: steps per interval from the Courant rate, re-planned for the
  // rest of the interval whenever the rate grows past twice the target.
  auto plan = [&](Scalar span) {
    const Scalar rate = courant_rate(state.psi, grid);
    return std::max<long>(1, rate > 0 ? static_cast<long>(std::ceil(span * rate / config.cfl_target)) : 1);
  };
  for (long k = 0; k < intervals; ++k) {
    const Scalar start = t0 + k * config.snapshot_dt;
    const Scalar stop = t0 + (k + 1) * config.snapshot_dt;
    Scalar seg_start = start;
    long steps = fixed_steps > 0 ? fixed_steps : plan(config.snapshot_dt);
    Scalar dt = config.snapshot_dt / steps;
    for (long s = 0; s < steps; ++s) {
      const Scalar rate = courant_rate(state.psi, grid);
      if (fixed_steps == 0 && s > 0 && dt * rate > 2 * config.cfl_target) {
        seg_start = state.t;
        steps = plan(stop - seg_start);
        dt = (stop - seg_start) / steps;
        s = 0;
      }
      rec.dt_min = std::min(rec.dt_min, dt);
      rec.dt_max = std::max(rec.dt_max, dt);
      stepper.advance(state, dt, rate);
      state.t = seg_start + (s + 1) * dt;
      rec.max_stokes_defect = std::max(rec.max_stokes_defect, stokes_defect(state, grid));
      ++rec.steps;
    }
    state.t = stop;
    observe();
  }
  return rec;
}

}  // namespace thinflow
