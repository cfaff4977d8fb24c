#pragma once

#include <map>
#include <string>
#include <vector>

#include "thinflow/lab.hpp"

namespace thinflow {

/// Everything a run or study reads from its JSON config. Missing keys take
/// the defaults below; unknown keys are rejected.
struct RunConfig {
  std::string curve = "segment";
  std::vector<Bump<double>> omega0;
  double gamma = 0;
  double nu = 0.01;
  double lambda = 4;
  std::vector<double> eps_list{0.2, 0.1, 0.05, 0.025};

  int n_sigma = 128;
  int n_theta = 256;
  double r_max = 100;

  double dt = 0;  ///< 0 = automatic
  double t_end = 0.5;
  double snapshot_dt = 0.01;

  ProbePatch<double> patch{};
  std::string output = "out";
  WallClosure closure = WallClosure::thom;

  // study-only settings
  std::vector<lab::Rung> ladder = lab::StudyConfig{}.ladder;
  double ladder_eps = 0.2;
  double t_energy = 1;
  ProbePatch<double> far_patch = lab::StudyConfig{}.far_patch;
  WallClosure variant = WallClosure::jensen;
  std::vector<TestField<double>> test_fields = lab::StudyConfig{}.test_fields;

  std::map<std::string, double> tolerances = lab::default_tolerances();

  FlowData<double> flow() const;
  lab::StudyConfig study() const;
  SolverConfig<double> solver() const;

  /// Full config with every default filled in; parse_config(to_json()) is
  /// the identity.
  lab::Json to_json() const;
  bool operator==(const RunConfig&) const;
};

/// Parses and validates. ConfigError messages start with the field path
/// ("grid.n_sigma: ...") or the JSON line and column.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Semantic checks: bump supports clear Omega_{eps_max}, lambda >= 2, eps
/// strictly decreasing, grid and time consistency.
void validate(const RunConfig& c);

WallClosure closure_from_string(const std::string& s);

}  // namespace thinflow
