#include <algorithm>
#include <cmath>
#include <numbers>

#include "thinflow/errors.hpp"
#include "thinflow/lab.hpp"

namespace thinflow::lab {

FitResult fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fit needs at least two (x, y) pairs");
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0) || !(y[k] > 0) || !std::isfinite(x[k]) || !std::isfinite(y[k]))
      throw DomainError("degenerate fit: non-positive or non-finite sample");
    lx.push_back(std::log(x[k]));
    ly.push_back(std::log(y[k]));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxx += (lx[k] - mx) * (lx[k] - mx);
    sxy += (lx[k] - mx) * (ly[k] - my);
  }
  if (!(sxx > 0)) throw DomainError("degenerate fit: all abscissae coincide");
  FitResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ss = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    const double e = ly[k] - (r.intercept + r.slope * lx[k]);
    ss += e * e;
  }
  r.residual = std::sqrt(ss / n);
  r.reliable = r.residual <= fit_residual_limit;
  r.points = lx.size();
  return r;
}

FitResult decay_fit(const Sampler& field, const std::vector<double>& radii, int points_per_circle) {
  if (radii.size() < 2) throw DomainError("decay fit needs at least two radii");
  const auto [lo, hi] = std::minmax_element(radii.begin(), radii.end());
  if (!(*lo > 0) || !(*hi >= 10 * *lo)) throw DomainError("decay fit radii must span at least one decade");
  std::vector<double> peak;
  for (double r : radii) {
    double m = 0;
    for (int k = 0; k < points_per_circle; ++k)
      m = std::max(m, std::abs(field(std::polar(r, 2 * std::numbers::pi * (k + 0.5) / points_per_circle))));
    if (!(m > 0)) throw DomainError("degenerate fit: field vanishes on a circle");
    peak.push_back(m);
  }
  return fit_power_law(radii, peak);
}

FitResult endpoint_fit(const Sampler& field, const std::vector<double>& distances, int endpoint, double tip) {
  if (endpoint != 1 && endpoint != -1) throw DomainError("endpoint must be +1 or -1");
  std::vector<double> mag;
  for (double d : distances) {
    if (!(d > 0 && d <= 0.1)) throw DomainError("endpoint distances must lie in (0, 0.1]");
    const double m = std::abs(field(Point(endpoint * (tip + d), 0)));
    if (!(m > 0)) throw DomainError("degenerate fit: field vanishes near the endpoint");
    mag.push_back(m);
  }
  return fit_power_law(distances, mag);
}

}  // namespace thinflow::lab
