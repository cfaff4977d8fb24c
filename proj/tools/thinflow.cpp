#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "thinflow/config.hpp"
#include "thinflow/fields.hpp"
#include "thinflow/io.hpp"
#include "thinflow/parallel.hpp"

namespace fs = std::filesystem;
using namespace thinflow;
using lab::ConvergenceReport;
using lab::Json;

namespace {

enum Exit { ok = 0, verdict_failure = 1, usage = 2, numerical = 3 };

enum class Level { quiet, info, debug };
Level verbosity = Level::info;

void log(Level at, const std::string& msg) {
  if (verbosity >= at) std::cerr << msg << "\n";
}

volatile std::sig_atomic_t interrupted = 0;

extern "C" void on_sigint(int) {
  if (interrupted) {
    std::signal(SIGINT, SIG_DFL);
    std::raise(SIGINT);
  }
  interrupted = 1;
}

std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", eps);
  return buf;
}

/// Prints one line per criterion; failures also go to stderr as JSON.
int finish(const ConvergenceReport& r) {
  Json failures = Json::array();
  for (const auto& c : r.criteria) {
    std::cout << lab::summary_line(c) << "\n";
    if (c.verdict != lab::Verdict::pass)
      failures.push_back({{"id", c.id}, {"verdict", lab::to_string(c.verdict)}, {"detail", c.detail}});
  }
  if (r.incomplete) failures.push_back({{"id", "incomplete"}, {"verdict", "fail"}, {"detail", "missing runs"}});
  if (failures.empty()) return Exit::ok;
  std::cerr << Json{{"config_hash", r.config_hash()}, {"failures", failures}}.dump() << "\n";
  return Exit::verdict_failure;
}

ConvergenceReport stamped(ConvergenceReport r, const RunConfig& cfg) {
  r.config = cfg.to_json();
  r.tolerances = cfg.tolerances;
  return r;
}

int emit(const ConvergenceReport& r, const fs::path& path, bool print_json) {
  lab::report_emit(r, path);
  log(Level::info, "wrote " + path.string());
  if (print_json) std::cout << r.to_json(false).dump(2) << "\n";
  return finish(r);
}

int cmd_field_sample(const RunConfig& cfg, double eps, const std::string& field, const std::string& path) {
  const FieldSet<double> fs(cfg.flow(), ObstacleFamily<double>(eps), CutoffProfile<double>(cfg.lambda));
  std::function<Complex<double>(const Complex<double>&)> f;
  if (field == "initial") f = [&](const Complex<double>& x) { return fs.initial_extended(x); };
  else if (field == "induced") f = [&](const Complex<double>& x) { return fs.induced(x); };
  else if (field == "harmonic") f = [&](const Complex<double>& x) { return fs.harmonic(x); };
  else if (field == "background") f = [&](const Complex<double>& x) { return fs.background(x); };
  else if (field == "shifted") f = [&](const Complex<double>& x) { return fs.shifted(x); };
  else throw ConfigError("--field: unknown field '" + field + "'");
  const auto nodes = cfg.patch.nodes();
  std::vector<Complex<double>> u(nodes.size());
  std::vector<char> valid(nodes.size(), 1);
  parallel_for(nodes.size(), [&](std::size_t k) {
    try {
      u[k] = f(nodes[k]);
    } catch (const DomainError&) {
      valid[k] = 0;
    }
  });
  std::ofstream file;
  if (!path.empty()) {
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    file.open(path);
    if (!file) throw Error("cannot open " + path + " for writing");
  }
  std::ostream& os = path.empty() ? std::cout : file;
  os << "# config_hash=" << fnv1a_hex(cfg.to_json().dump()) << "\n" << "x1,x2,u1,u2\n";
  os.precision(17);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    os << nodes[k].real() << ',' << nodes[k].imag() << ',';
    if (valid[k]) os << u[k].real() << ',' << u[k].imag() << '\n';
    else os << "nan,nan\n";
  }
  if (!path.empty()) log(Level::info, "wrote " + path);
  return Exit::ok;
}

int cmd_simulate(const RunConfig& cfg, double eps, const fs::path& out) {
  const auto g = build_grid<double>(eps, cfg.n_sigma, cfg.n_theta, cfg.r_max);
  const PoissonSolver<double> ps(g);
  auto state = init_state(g, cfg.flow(), ps, cfg.closure);
  RunOptions<double> opt;
  opt.profile = CutoffProfile<double>(cfg.lambda);
  opt.c1 = cfg.tolerances.at("envelope_c1");
  opt.envelope_margin = cfg.tolerances.at("envelope_margin");
  log(Level::info, "simulate eps " + eps_tag(eps) + " on " + std::to_string(cfg.n_sigma) + "x" +
                       std::to_string(cfg.n_theta));
  const auto rec = simulate(state, g, ps, cfg.solver(), cfg.patch, opt);
  log(Level::debug, std::to_string(rec.steps) + " steps, dt in [" + eps_tag(rec.dt_min) + ", " +
                        eps_tag(rec.dt_max) + "]");

  ConvergenceReport r;
  Json c = cfg.to_json();
  c["eps"] = eps;
  r.config = c;
  r.tolerances = cfg.tolerances;
  const double t_stokes = cfg.tolerances.at("stokes_defect");
  lab::Criterion k;
  k.id = "simulate.stokes_defect";
  k.title = "circulation bookkeeping beta + mass = alpha";
  k.measured = rec.max_stokes_defect;
  k.tolerance = t_stokes;
  k.verdict = rec.max_stokes_defect <= t_stokes ? lab::Verdict::pass : lab::Verdict::fail;
  k.detail = std::to_string(rec.steps) + " steps";
  r.criteria.push_back(k);
  k = {};
  k.id = "simulate.envelope";
  k.title = "energy envelope";
  k.verdict = rec.envelope_held ? lab::Verdict::pass : lab::Verdict::fail;
  r.criteria.push_back(k);

  const auto path = out / ("simulate_eps" + eps_tag(eps) + ".json");
  lab::report_emit(r, path);
  const std::string hash = r.config_hash();
  const std::string stem = (out / ("simulate_eps" + eps_tag(eps))).string();
  write_snapshots_csv(stem + "_snapshots.csv", rec, hash);
  write_diagnostics_csv(stem + "_diagnostics.csv", rec, hash);
  write_checkpoint(stem + ".ckpt", state, g);
  log(Level::info, "wrote " + stem + ".{json,ckpt} and CSVs");
  return finish(r);
}

int cmd_study(const RunConfig& cfg, const fs::path& out) {
  const auto scfg = cfg.study();
  const auto stages = lab::study_stages(scfg, cfg.tolerances);
  ConvergenceReport r = stamped({}, cfg);
  const auto path = out / "study.json";
  std::signal(SIGINT, on_sigint);
  for (const auto& stage : stages) {
    if (interrupted) {
      log(Level::info, "interrupted; writing a partial report");
      r.incomplete = true;
      break;
    }
    log(Level::info, "stage " + stage.name);
    auto part = stage.run();
    for (const auto& c : part.criteria) log(Level::debug, "  " + lab::summary_line(c));
    r.merge(part);
    lab::report_emit(r, path);
  }
  std::signal(SIGINT, SIG_DFL);
  lab::report_emit(r, path);
  log(Level::info, "wrote " + path.string());
  return finish(r);
}

int cmd_report(const std::string& path) {
  const auto r = lab::report_load(path);
  std::ifstream is(path);
  const auto stored = Json::parse(is).at("config_hash").get<std::string>();
  if (stored != r.config_hash())
    throw ConfigError(path + ": config hash " + stored + " does not match its contents (" + r.config_hash() + ")");
  return finish(r);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thinflow: flow past a thin obstacle, convergence lab"};
  app.fallthrough();
  app.require_subcommand(1);
  std::string config_path, out_dir, level = "info", field = "initial", sample_out, report_path;
  double eps = -1;
  int threads = 0;
  app.add_option("--config", config_path, "JSON config")->check(CLI::ExistingFile);
  app.add_option("--eps", eps, "obstacle parameter for simulate and field sample");
  app.add_option("--out", out_dir, "output directory (default: config output)");
  app.add_option("--threads", threads, "worker threads (env THINFLOW_THREADS)")->check(CLI::PositiveNumber);
  app.add_option("--verbosity", level, "quiet, info or debug")->check(CLI::IsMember({"quiet", "info", "debug"}));

  auto* map = app.add_subcommand("map", "conformal map checks");
  map->require_subcommand(1);
  auto* map_check = map->add_subcommand("check", "invariant suite of the maps, as JSON");
  auto* field_cmd = app.add_subcommand("field", "explicit velocity fields");
  field_cmd->require_subcommand(1);
  auto* sample = field_cmd->add_subcommand("sample", "CSV x1,x2,u1,u2 on the config patch");
  sample->add_option("--field", field, "initial, induced, harmonic, background or shifted")
      ->check(CLI::IsMember({"initial", "induced", "harmonic", "background", "shifted"}));
  sample->add_option("--file", sample_out, "write the CSV here instead of stdout");
  auto* verify = field_cmd->add_subcommand("verify", "invariant suite of the fields, as JSON");
  auto* sim = app.add_subcommand("simulate", "one run at a single eps");
  auto* study = app.add_subcommand("study", "all acceptance criteria over the eps list and ladder");
  auto* report = app.add_subcommand("report", "print and check a saved report");
  report->add_option("path", report_path, "report JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return Exit::usage;
  }

  verbosity = level == "quiet" ? Level::quiet : level == "debug" ? Level::debug : Level::info;
  if (threads == 0) {
    if (const char* env = std::getenv("THINFLOW_THREADS")) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        threads = 0;
      }
      if (threads < 1) {
        std::cerr << "THINFLOW_THREADS: expected a positive integer, got '" << env << "'\n";
        return Exit::usage;
      }
    } else {
      threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    }
  }
  set_thread_count(threads);

  try {
    const RunConfig cfg = config_path.empty() ? parse_config("{}") : load_config(config_path);
    const fs::path out = out_dir.empty() ? fs::path(cfg.output) : fs::path(out_dir);
    log(Level::debug, "config hash " + fnv1a_hex(cfg.to_json().dump()) + ", " + std::to_string(threads) + " threads");

    auto single_eps = [&](bool allow_zero) {
      if (eps >= 0) {
        if (!allow_zero && eps == 0) throw ConfigError("--eps: must be > 0");
        return eps;
      }
      if (cfg.eps_list.size() != 1) throw ConfigError("--eps: needed unless eps_list has exactly one value");
      return cfg.eps_list.front();
    };
    if (eps >= 0 && (study->parsed() || report->parsed() || map->parsed() || verify->parsed()))
      throw ConfigError("--eps: only simulate and field sample take a single eps");

    if (map_check->parsed()) return emit(stamped(lab::map_check(cfg.tolerances), cfg), out / "map_check.json", true);
    if (verify->parsed())
      return emit(stamped(lab::field_verify(cfg.flow(), cfg.tolerances), cfg), out / "field_verify.json", true);
    if (sample->parsed()) return cmd_field_sample(cfg, single_eps(true), field, sample_out);
    if (sim->parsed()) return cmd_simulate(cfg, single_eps(false), out);
    if (study->parsed()) return cmd_study(cfg, out);
    if (report->parsed()) return cmd_report(report_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return Exit::usage;
  } catch (const Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return Exit::numerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::numerical;
  }
  return Exit::usage;
}
