#include "thinflow/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace thinflow {

using lab::Json;

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

/// Walks one JSON object, remembering which keys were read so leftovers
/// can be reported by path.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& msg, const std::string& key = "") const {
    throw ConfigError(at(key) + ": " + msg);
  }

  std::string at(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const Json& get(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const auto& v = get(key);
    if (!v.is_number()) fail("expected a number", key);
    out = v.get<double>();
    if (!std::isfinite(out)) fail("must be finite", key);
  }

  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const auto& v = get(key);
    if (!v.is_number_integer()) fail("expected an integer", key);
    out = v.get<int>();
  }

  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const auto& v = get(key);
    if (!v.is_string()) fail("expected a string", key);
    out = v.get<std::string>();
  }

  void closure(const std::string& key, WallClosure& out) {
    std::string s;
    if (!has(key)) return;
    string(key, s);
    try {
      out = closure_from_string(s);
    } catch (const ConfigError& e) {
      fail(e.what(), key);
    }
  }

  const Json& array(const std::string& key) {
    const auto& v = get(key);
    if (!v.is_array()) fail("expected an array", key);
    return v;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) fail("unknown key", k);
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Complex<double> point(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(path + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

ProbePatch<double> read_patch(const Json& j, const std::string& path, ProbePatch<double> p) {
  Reader r(j, path);
  if (r.has("bounds")) {
    const auto& b = r.array("bounds");
    if (b.size() != 4) r.fail("expected [x_min, x_max, y_min, y_max]", "bounds");
    for (const auto& v : b)
      if (!v.is_number()) r.fail("expected numbers", "bounds");
    p.x_min = b[0];
    p.x_max = b[1];
    p.y_min = b[2];
    p.y_max = b[3];
  }
  r.number("delta", p.delta);
  r.integer("n", p.n);
  r.finish();
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return p;
}

Json patch_json(const ProbePatch<double>& p) {
  return {{"bounds", {p.x_min, p.x_max, p.y_min, p.y_max}}, {"delta", p.delta}, {"n", p.n}};
}

void read_config(const Json& j, RunConfig& c) {
  Reader r(j, "");
  if (r.has("curve")) {
    const auto& v = r.get("curve");
    if (v.is_string()) {
      c.curve = v.get<std::string>();
    } else {
      Reader cr(v, "curve");
      cr.string("kind", c.curve);
      cr.finish();
    }
    if (c.curve != "segment") r.fail("only the segment is supported, got '" + c.curve + "'", "curve");
  }
  if (r.has("omega0")) {
    const auto& a = r.array("omega0");
    c.omega0.clear();
    for (std::size_t k = 0; k < a.size(); ++k) {
      const std::string path = "omega0[" + std::to_string(k) + "]";
      Reader br(a[k], path);
      Bump<double> b;
      if (!br.has("center")) br.fail("missing center");
      b.center = point(br.get("center"), path + ".center");
      if (!br.has("radius")) br.fail("missing radius");
      br.number("radius", b.radius);
      br.number("amplitude", b.amplitude);
      br.finish();
      c.omega0.push_back(b);
    }
  }
  r.number("gamma", c.gamma);
  r.number("nu", c.nu);
  r.number("lambda", c.lambda);
  if (r.has("eps_list")) {
    const auto& a = r.array("eps_list");
    c.eps_list.clear();
    for (const auto& v : a) {
      if (!v.is_number()) r.fail("expected numbers", "eps_list");
      c.eps_list.push_back(v.get<double>());
    }
  }
  if (r.has("grid")) {
    Reader g(r.get("grid"), "grid");
    g.integer("n_sigma", c.n_sigma);
    g.integer("n_theta", c.n_theta);
    g.number("r_max", c.r_max);
    g.finish();
  }
  if (r.has("time")) {
    Reader t(r.get("time"), "time");
    t.number("dt", c.dt);
    t.number("t_end", c.t_end);
    t.number("snapshot_dt", c.snapshot_dt);
    t.finish();
  }
  if (r.has("patch")) c.patch = read_patch(r.get("patch"), "patch", c.patch);
  r.string("output", c.output);
  r.closure("closure", c.closure);
  if (r.has("study")) {
    Reader s(r.get("study"), "study");
    if (s.has("ladder")) {
      const auto& a = s.array("ladder");
      c.ladder.clear();
      for (std::size_t k = 0; k < a.size(); ++k) {
        Reader lr(a[k], "study.ladder[" + std::to_string(k) + "]");
        lab::Rung rung;
        lr.integer("n_sigma", rung.n_sigma);
        lr.integer("n_theta", rung.n_theta);
        lr.number("dt", rung.dt);
        lr.finish();
        c.ladder.push_back(rung);
      }
    }
    s.number("ladder_eps", c.ladder_eps);
    s.number("t_energy", c.t_energy);
    if (s.has("far_patch")) c.far_patch = read_patch(s.get("far_patch"), "study.far_patch", c.far_patch);
    s.closure("variant", c.variant);
    if (s.has("test_fields")) {
      const auto& a = s.array("test_fields");
      c.test_fields.clear();
      for (std::size_t k = 0; k < a.size(); ++k) {
        const std::string path = "study.test_fields[" + std::to_string(k) + "]";
        Reader fr(a[k], path);
        TestField<double> f;
        if (!fr.has("center")) fr.fail("missing center");
        f.center = point(fr.get("center"), path + ".center");
        fr.number("radius", f.radius);
        fr.number("t_start", f.t_start);
        fr.number("t_stop", f.t_stop);
        fr.finish();
        c.test_fields.push_back(f);
      }
    }
    s.finish();
  }
  if (r.has("tolerances")) {
    Reader t(r.get("tolerances"), "tolerances");
    for (auto& [k, v] : c.tolerances) t.number(k, v);
    t.finish();
  }
  r.finish();
}

}  // namespace

WallClosure closure_from_string(const std::string& s) {
  if (s == "thom") return WallClosure::thom;
  if (s == "jensen") return WallClosure::jensen;
  throw ConfigError("unknown wall closure '" + s + "' (thom or jensen)");
}

void validate(const RunConfig& c) {
  if (!(c.nu > 0)) throw ConfigError("nu: must be > 0, got " + num(c.nu));
  if (!(c.lambda >= 2)) throw ConfigError("lambda: must be >= 2, got " + num(c.lambda));
  if (c.eps_list.empty()) throw ConfigError("eps_list: must not be empty");
  for (std::size_t k = 0; k < c.eps_list.size(); ++k) {
    if (!(c.eps_list[k] > 0)) throw ConfigError("eps_list[" + std::to_string(k) + "]: must be > 0");
    if (k && !(c.eps_list[k] < c.eps_list[k - 1]))
      throw ConfigError("eps_list[" + std::to_string(k) + "]: list must be strictly decreasing");
  }
  // Supports must clear the largest obstacle, hence every smaller one.
  for (std::size_t k = 0; k < c.omega0.size(); ++k) {
    const auto& b = c.omega0[k];
    const std::string path = "omega0[" + std::to_string(k) + "]";
    if (!(b.radius > 0)) throw ConfigError(path + ".radius: must be > 0");
    const double seg = BumpVorticity<double>::distance_to_segment(b);
    if (!(seg > 0)) throw ConfigError(path + ": support intersects the curve (distance " + num(seg) + ")");
    const double gap = BumpVorticity<double>({}, c.eps_list.front()).clearance(b);
    if (!(gap > 0))
      throw ConfigError(path + ": support intersects the obstacle at eps = " + num(c.eps_list.front()) +
                        " (clearance " + num(gap) + ")");
    if (std::abs(b.center) + b.radius > c.r_max / 2)
      throw ConfigError(path + ": support must lie inside half the outer radius " + num(c.r_max));
  }
  if (c.n_sigma < 16) throw ConfigError("grid.n_sigma: must be >= 16");
  if (c.n_theta < 16 || c.n_theta % 2) throw ConfigError("grid.n_theta: must be even and >= 16");
  if (!(c.r_max > 2)) throw ConfigError("grid.r_max: must be > 2");
  if (!(c.snapshot_dt > 0)) throw ConfigError("time.snapshot_dt: must be > 0");
  if (!(c.t_end >= 0)) throw ConfigError("time.t_end: must be >= 0");
  if (std::abs(std::round(c.t_end / c.snapshot_dt) * c.snapshot_dt - c.t_end) > 1e-9 * std::max(1.0, c.t_end))
    throw ConfigError("time.t_end: must be a multiple of time.snapshot_dt");
  if (c.dt < 0) throw ConfigError("time.dt: must be >= 0");
  if (c.dt > 0) {
    const double steps = std::round(c.snapshot_dt / c.dt);
    if (steps < 1 || std::abs(steps * c.dt - c.snapshot_dt) > 1e-9 * c.snapshot_dt)
      throw ConfigError("time.dt: must divide time.snapshot_dt");
  }
  if (c.output.empty()) throw ConfigError("output: must not be empty");
  for (const auto& [k, v] : c.tolerances)
    if (!(v > 0)) throw ConfigError("tolerances." + k + ": must be > 0");
}

FlowData<double> RunConfig::flow() const {
  FlowData<double> f;
  f.gamma = gamma;
  f.nu = nu;
  if (!omega0.empty()) f.omega0 = BumpVorticity<double>(omega0, eps_list.front());
  return f;
}

lab::StudyConfig RunConfig::study() const {
  lab::StudyConfig s;
  s.flow = flow();
  s.lambda = lambda;
  s.eps_list = eps_list;
  s.rung = {n_sigma, n_theta, dt};
  s.ladder = ladder;
  s.ladder_eps = ladder_eps;
  s.r_max = r_max;
  s.t_study = t_end;
  s.t_energy = t_energy;
  s.snapshot_dt = snapshot_dt;
  s.patch = patch;
  s.far_patch = far_patch;
  s.closure = closure;
  s.variant = variant;
  s.test_fields = test_fields;
  return s;
}

SolverConfig<double> RunConfig::solver() const {
  SolverConfig<double> s;
  s.nu = nu;
  s.dt = dt;
  s.t_end = t_end;
  s.snapshot_dt = snapshot_dt;
  s.closure = closure;
  return s;
}

Json RunConfig::to_json() const {
  Json bumps = Json::array();
  for (const auto& b : omega0)
    bumps.push_back({{"center", {b.center.real(), b.center.imag()}}, {"radius", b.radius}, {"amplitude", b.amplitude}});
  Json rungs = Json::array();
  for (const auto& r : ladder) rungs.push_back({{"n_sigma", r.n_sigma}, {"n_theta", r.n_theta}, {"dt", r.dt}});
  Json fields = Json::array();
  for (const auto& f : test_fields)
    fields.push_back({{"center", {f.center.real(), f.center.imag()}},
                      {"radius", f.radius},
                      {"t_start", f.t_start},
                      {"t_stop", f.t_stop}});
  Json tol = Json::object();
  for (const auto& [k, v] : tolerances) tol[k] = v;
  Json j;
  j["curve"] = curve;
  j["omega0"] = bumps;
  j["gamma"] = gamma;
  j["nu"] = nu;
  j["lambda"] = lambda;
  j["eps_list"] = eps_list;
  j["grid"] = {{"n_sigma", n_sigma}, {"n_theta", n_theta}, {"r_max", r_max}};
  j["time"] = {{"dt", dt}, {"t_end", t_end}, {"snapshot_dt", snapshot_dt}};
  j["patch"] = patch_json(patch);
  j["output"] = output;
  j["closure"] = to_string(closure);
  j["study"] = {{"ladder", rungs},
                {"ladder_eps", ladder_eps},
                {"t_energy", t_energy},
                {"far_patch", patch_json(far_patch)},
                {"variant", to_string(variant)},
                {"test_fields", fields}};
  j["tolerances"] = tol;
  return j;
}

bool RunConfig::operator==(const RunConfig& o) const { return to_json() == o.to_json(); }

RunConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c;
  try {
    read_config(j, c);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace thinflow
