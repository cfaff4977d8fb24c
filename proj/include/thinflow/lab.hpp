#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "thinflow/bump.hpp"
#include "thinflow/conformal.hpp"
#include "thinflow/patch.hpp"
#include "thinflow/probes.hpp"
#include "thinflow/run.hpp"
#include "thinflow/weak.hpp"

namespace thinflow::lab {

using Json = nlohmann::ordered_json;
using Point = Complex<double>;
using Sampler = FieldSampler<double>;

// ---------------------------------------------------------------- fits

/// Least-squares line through (log x, log y). `residual` is the RMS of the
/// log residuals; a fit with residual > 0.1 is unreliable.
struct FitResult {
  double slope = 0;
  double intercept = 0;
  double residual = 0;
  bool reliable = false;
  std::size_t points = 0;
};

inline constexpr double fit_residual_limit = 0.1;

FitResult fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

/// Slope of log max|f| on circles |x| = r against log r. The radii must span
/// at least a decade.
FitResult decay_fit(const Sampler& field, const std::vector<double>& radii, int points_per_circle = 256);

/// Slope of log|f| at endpoint * (tip + d) against log d, approaching the
/// tip of the obstacle along the axis from outside. tip is the semi-major
/// axis of Omega_eps (1 for the plate). distances in (0, 0.1].
FitResult endpoint_fit(const Sampler& field, const std::vector<double>& distances, int endpoint,
                       double tip = 1);

// -------------------------------------------------------------- reports

enum class Verdict { pass, fail, unreliable };
std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

/// Numeric table. Cells are JSON scalars; null marks a missing run.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;

  void add(std::vector<Json> row);
  bool operator==(const Table&) const = default;
};

struct Criterion {
  std::string id;
  std::string title;
  Verdict verdict = Verdict::fail;
  double measured = 0;
  double tolerance = 0;
  std::string detail;
  double seconds = 0;
  double budget = 0;  ///< runtime budget in seconds, 0 = none

  bool operator==(const Criterion&) const = default;
};

/// "C3 pass  <title>  measured=... tol=... (1.2 s)"; one line per criterion.
std::string summary_line(const Criterion& c);

struct ConvergenceReport {
  Json config = Json::object();
  std::map<std::string, double> tolerances;
  std::map<std::string, Table> tables;
  std::vector<Criterion> criteria;
  bool incomplete = false;

  /// FNV-1a of the config together with the tolerances.
  std::string config_hash() const;
  bool all_pass() const;
  const Criterion* find(const std::string& id) const;
  void merge(const ConvergenceReport& other);

  /// Wall-clock seconds are left out when `timings` is false.
  Json to_json(bool timings = true) const;
  static ConvergenceReport from_json(const Json& j);
  bool operator==(const ConvergenceReport&) const = default;
};

/// Writes the report as JSON to `path`, each table as <stem>_<table>.csv
/// beside it, and the criterion runtimes as <stem>_timings.json so the
/// other files are reproducible byte for byte. Throws Error on I/O failure.
std::filesystem::path timings_path(const std::filesystem::path& report);
void report_emit(const ConvergenceReport& report, const std::filesystem::path& path);
ConvergenceReport report_load(const std::filesystem::path& path);

/// Default tolerance set; keys are documented in the README.
std::map<std::string, double> default_tolerances();

// ------------------------------------------------------------- studies

/// One rung of a refinement ladder. dt = 0 selects the automatic step.
struct Rung {
  int n_sigma = 128;
  int n_theta = 256;
  double dt = 0;
};

struct StudyConfig {
  FlowData<double> flow;
  double lambda = 4;
  std::vector<double> eps_list{0.2, 0.1, 0.05, 0.025};
  Rung rung{128, 256, 0};
  std::vector<Rung> ladder{{128, 256, 1.25e-3}, {256, 512, 6.25e-4}, {512, 1024, 3.125e-4}};
  double ladder_eps = 0.2;
  double r_max = 100;
  double t_study = 0.5;
  double t_energy = 1;
  double snapshot_dt = 0.01;
  ProbePatch<double> patch{};
  ProbePatch<double> far_patch{4, 6, -1, 1, 0.2, 64};
  WallClosure closure = WallClosure::thom;
  WallClosure variant = WallClosure::jensen;
  std::vector<TestField<double>> test_fields{
      {{0.0, 1.1}, 0.45, 0.1, 0.4}, {{-1.3, -0.6}, 0.4, 0.05, 0.45}, {{1.4, 0.6}, 0.5, 0.1, 0.45}};

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Reference problem: counter-rotating bump pair, gamma = 1, nu = 0.01.
StudyConfig reference_study();

/// ||E u0^eps - u0|| on the patch for each eps.
Table initial_data_convergence(const std::vector<double>& eps_list, const ProbePatch<double>& patch,
                               const FlowData<double>& flow);

struct LpBound {
  Table table;
  bool uniform = false;   ///< max/min over eps <= ratio
  bool divergent = false; ///< p = 2 with alpha != 0: tail not integrable
};
LpBound lp_uniform_bound(const std::vector<double>& eps_list, double p, double radius,
                         const FlowData<double>& flow, double ratio = 2);

/// Time-integrated L2 distance between two runs sampled on the same patch;
/// `stride` > 1 thins the snapshots (cadence guard).
double time_integrated_distance(const ProbePatch<double>& patch, const std::vector<Snapshot<double>>& a,
                                const std::vector<Snapshot<double>>& b, int stride = 1);

/// Snapshots of one run on the near and far patches, plus bookkeeping.
struct RunSamples {
  double eps = 0;
  Rung rung;
  WallClosure closure = WallClosure::thom;
  std::vector<Snapshot<double>> near, far;
  std::vector<double> ladyzhenskaya;  ///< L4 / (L2^{1/2} grad^{1/2}) per snapshot
  RunRecord<double> record;           ///< near-patch record (weak residuals)
  std::string error;                  ///< non-empty if the run failed
  double seconds = 0;
};

RunSamples sampled_run(const StudyConfig& cfg, double eps, const Rung& rung, WallClosure closure, double t_end,
                       bool diagnostics = false);

/// Pairwise distances along the eps list at cfg.rung.
ConvergenceReport flow_convergence(const StudyConfig& cfg, const std::map<std::string, double>& tol);

/// Weak residual (criterion 11) and uniqueness probe (criterion 12) share
/// the ladder runs at cfg.ladder_eps.
ConvergenceReport ladder_study(const StudyConfig& cfg, const std::map<std::string, double>& tol);

// -------------------------------------------------------------- suites

/// Invariant suite of the conformal maps (includes criterion 6).
ConvergenceReport map_check(const std::map<std::string, double>& tol);
/// Invariant suite of the explicit fields (criteria 1 to 5).
ConvergenceReport field_verify(const FlowData<double>& flow, const std::map<std::string, double>& tol);

/// Individual acceptance criteria. Each returns a report holding the
/// criterion and its tables.
ConvergenceReport criterion_1(const std::map<std::string, double>& tol);
ConvergenceReport criterion_2(const FlowData<double>& flow, const std::map<std::string, double>& tol);
ConvergenceReport criterion_3(const FlowData<double>& flow, const std::map<std::string, double>& tol);
ConvergenceReport criterion_4(const std::map<std::string, double>& tol);
ConvergenceReport criterion_5(const std::map<std::string, double>& tol);
ConvergenceReport criterion_6(const std::map<std::string, double>& tol);
ConvergenceReport criterion_7(const StudyConfig& cfg, const std::map<std::string, double>& tol);
ConvergenceReport criterion_8(const std::map<std::string, double>& tol);
ConvergenceReport criterion_9(const StudyConfig& cfg, const std::map<std::string, double>& tol);

/// One independently runnable piece of the full study.
struct Stage {
  std::string name;
  std::function<ConvergenceReport()> run;
};
std::vector<Stage> study_stages(const StudyConfig& cfg, const std::map<std::string, double>& tol);

/// Everything: criteria 1 to 12 plus the supporting tables.
ConvergenceReport full_study(const StudyConfig& cfg, const std::map<std::string, double>& tol);

}  // namespace thinflow::lab
