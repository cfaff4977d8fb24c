#pragma once

#include <chrono>
#include <cmath>
#include <string>

#include "thinflow/lab.hpp"

namespace thinflow::lab::detail {

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline double tolerance(const std::map<std::string, double>& tol, const std::string& key) {
  const auto it = tol.find(key);
  if (it == tol.end()) throw ConfigError("missing tolerance '" + key + "'");
  return it->second;
}

/// Verdict from a measured value and its tolerance; the runtime budget is
/// part of the criterion.
inline Criterion judge(std::string id, std::string title, bool ok, double measured, double tol, std::string detail,
                       double seconds, double budget, bool reliable = true) {
  Criterion c;
  c.id = std::move(id);
  c.title = std::move(title);
  c.measured = measured;
  c.tolerance = tol;
  c.detail = std::move(detail);
  c.seconds = seconds;
  c.budget = budget;
  if (!reliable)
    c.verdict = Verdict::unreliable;
  else
    c.verdict = ok ? Verdict::pass : Verdict::fail;
  if (budget > 0 && seconds > budget) {
    c.verdict = Verdict::fail;
    c.detail += "; over the runtime budget";
  }
  return c;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ", ") + fmt(x);
  return s;
}

/// Strictly decreasing sequence.
inline bool decreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k)
    if (!(v[k] < v[k - 1])) return false;
  return true;
}

}  // namespace thinflow::lab::detail
