#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "thinflow/errors.hpp"
#include "thinflow/io.hpp"
#include "common.hpp"

namespace thinflow::lab {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::unreliable: return "unreliable";
  }
  return "fail";
}

std::string summary_line(const Criterion& c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, " (%.1f s)", c.seconds);
  return c.id + " " + to_string(c.verdict) + "  " + c.title + "  measured=" + detail::fmt(c.measured) +
         " tol=" + detail::fmt(c.tolerance) + buf + (c.detail.empty() ? "" : "  [" + c.detail + "]");
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "pass") return Verdict::pass;
  if (s == "fail") return Verdict::fail;
  if (s == "unreliable") return Verdict::unreliable;
  throw ConfigError("unknown verdict '" + s + "'");
}

void Table::add(std::vector<Json> row) {
  if (row.size() != columns.size()) throw DomainError("table row does not match the column count");
  rows.push_back(std::move(row));
}

std::map<std::string, double> default_tolerances() {
  return {
      {"circulation", 1e-6},         {"far_h_product", 0.01},    {"slope_h", 0.05},
      {"slope_k", 0.1},              {"slope_w", 0.1},           {"endpoint_slope", 0.05},
      {"jump_relative", 1e-3},       {"jump_total", 1e-3},       {"oracle_offset", 1e-5},
      {"assumption_identity", 1e-12}, {"poisson_carrier", 1e-10}, {"order_min", 1.8},
      {"stokes_defect", 1e-6},       {"far_circulation", 1e-4},  {"envelope_margin", 0.1},
      {"envelope_c1", 2},            {"weak_ratio", 3},          {"refinement_ratio", 2},
      {"lp_uniform_ratio", 2},       {"far_locality", 10},       {"initial_far_patch", 1e-3},
      {"fit_residual", fit_residual_limit},
  };
}

namespace {

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
double number_or_nan(const Json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

std::string csv_cell(const Json& c) {
  if (c.is_null()) return "";
  if (c.is_string()) {
    const auto s = c.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
      if (ch == '"') q += '"';
      q += ch;
    }
    return q + "\"";
  }
  if (c.is_boolean()) return c.get<bool>() ? "1" : "0";
  if (c.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", c.get<double>());
    return buf;
  }
  return c.dump();
}

}  // namespace

std::string ConvergenceReport::config_hash() const {
  Json t = Json::object();
  for (const auto& [k, v] : tolerances) t[k] = v;
  return fnv1a_hex(config.dump() + "|" + t.dump());
}

bool ConvergenceReport::all_pass() const {
  if (incomplete) return false;
  for (const auto& c : criteria)
    if (c.verdict != Verdict::pass) return false;
  return true;
}

const Criterion* ConvergenceReport::find(const std::string& id) const {
  for (const auto& c : criteria)
    if (c.id == id) return &c;
  return nullptr;
}

void ConvergenceReport::merge(const ConvergenceReport& other) {
  for (const auto& [k, v] : other.tables) tables[k] = v;
  for (const auto& c : other.criteria) criteria.push_back(c);
  incomplete = incomplete || other.incomplete;
}

Json ConvergenceReport::to_json(bool timings) const {
  Json j;
  j["config_hash"] = config_hash();
  j["config"] = config;
  Json tol = Json::object();
  for (const auto& [k, v] : tolerances) tol[k] = v;
  j["tolerances"] = tol;
  Json tabs = Json::object();
  for (const auto& [name, t] : tables) tabs[name] = {{"columns", t.columns}, {"rows", t.rows}};
  j["tables"] = tabs;
  Json verdicts = Json::object();
  Json details = Json::array();
  for (const auto& c : criteria) {
    verdicts[c.id] = to_string(c.verdict);
    details.push_back({{"id", c.id},
                       {"title", c.title},
                       {"verdict", to_string(c.verdict)},
                       {"measured", finite_or_null(c.measured)},
                       {"tolerance", finite_or_null(c.tolerance)},
                       {"detail", c.detail},
                       {"budget", c.budget}});
    if (timings) details.back()["seconds"] = c.seconds;
  }
  j["verdicts"] = verdicts;
  j["criteria"] = details;
  j["incomplete"] = incomplete;
  return j;
}

ConvergenceReport ConvergenceReport::from_json(const Json& j) {
  ConvergenceReport r;
  try {
    r.config = j.at("config");
    for (const auto& [k, v] : j.at("tolerances").items()) r.tolerances[k] = v.get<double>();
    for (const auto& [name, t] : j.at("tables").items()) {
      Table tab;
      tab.columns = t.at("columns").get<std::vector<std::string>>();
      for (const auto& row : t.at("rows")) tab.rows.push_back(row.get<std::vector<Json>>());
      r.tables[name] = std::move(tab);
    }
    for (const auto& c : j.at("criteria")) {
      Criterion k;
      k.id = c.at("id").get<std::string>();
      k.title = c.at("title").get<std::string>();
      k.verdict = verdict_from_string(c.at("verdict").get<std::string>());
      k.measured = number_or_nan(c.at("measured"));
      k.tolerance = number_or_nan(c.at("tolerance"));
      k.detail = c.at("detail").get<std::string>();
      k.seconds = c.contains("seconds") ? c.at("seconds").get<double>() : 0.0;
      k.budget = c.at("budget").get<double>();
      r.criteria.push_back(std::move(k));
    }
    r.incomplete = j.at("incomplete").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::filesystem::path timings_path(const std::filesystem::path& report) {
  auto p = report;
  p.replace_filename(report.stem().string() + "_timings.json");
  return p;
}

void report_emit(const ConvergenceReport& report, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os << report.to_json(false).dump(2) << "\n";
    if (!os) throw Error("write failed: " + path.string());
  }
  const std::string hash = report.config_hash();
  {
    Json t = {{"config_hash", hash}, {"seconds", Json::object()}};
    for (const auto& c : report.criteria) t["seconds"][c.id] = c.seconds;
    const auto side = timings_path(path);
    std::ofstream os(side);
    if (!os) throw Error("cannot open " + side.string() + " for writing");
    os << t.dump(2) << "\n";
  }
  for (const auto& [name, t] : report.tables) {
    auto csv = path;
    csv.replace_filename(path.stem().string() + "_" + name + ".csv");
    std::ofstream os(csv);
    if (!os) throw Error("cannot open " + csv.string() + " for writing");
    os << "# config_hash=" << hash << "\n";
    for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << t.columns[k];
    os << "\n";
    for (const auto& row : t.rows) {
      for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << csv_cell(row[k]);
      os << "\n";
    }
    if (!os) throw Error("write failed: " + csv.string());
  }
}

ConvergenceReport report_load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  auto r = ConvergenceReport::from_json(j);
  std::ifstream ts(timings_path(path));
  if (ts) {
    try {
      const auto t = Json::parse(ts);
      for (auto& c : r.criteria)
        if (t.at("seconds").contains(c.id)) c.seconds = t.at("seconds").at(c.id).get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(timings_path(path).string() + ": " + e.what());
    }
  }
  return r;
}

}  // namespace thinflow::lab
