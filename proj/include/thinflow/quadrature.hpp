#pragma once

#include <Eigen/Core>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "thinflow/errors.hpp"

namespace thinflow {

/// Gauss-Legendre rule on [-1, 1].
template <typename Scalar>
struct GaussLegendre {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;

  explicit GaussLegendre(int n) : nodes(n), weights(n) {
    if (n < 1) throw QuadratureError("Gauss-Legendre order must be >= 1");
    const Scalar pi = std::numbers::pi_v<Scalar>;
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    for (int i = 0; i < (n + 1) / 2; ++i) {
      // Tricomi initial guess, then Newton on P_n.
      Scalar x = std::cos(pi * (Scalar(i) + Scalar(0.75)) / (Scalar(n) + Scalar(0.5)));
      Scalar dp = 0;
      for (int iter = 0; iter < 100; ++iter) {
        Scalar p0 = 1, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const Scalar pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = pk;
        }
        if (n == 1) p0 = 1;
        dp = n * (x * p1 - p0) / (x * x - 1);
        const Scalar dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) <= 4 * eps) break;
      }
      {
        Scalar p0 = 1, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const Scalar pk = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = pk;
        }
        if (n == 1) p0 = 1;
        dp = n * (x * p1 - p0) / (x * x - 1);
      }
      const Scalar w = 2 / ((1 - x * x) * dp * dp);
      nodes(i) = -x;
      nodes(n - 1 - i) = x;
      weights(i) = w;
      weights(n - 1 - i) = w;
    }
    if (n % 2 == 1) nodes(n / 2) = 0;
  }

  /// Integrates f over [a, b].
  template <typename F>
  Scalar integrate(F&& f, Scalar a, Scalar b) const {
    const Scalar half = (b - a) / 2, mid = (a + b) / 2;
    Scalar s = 0;
    for (Eigen::Index k = 0; k < nodes.size(); ++k) s += weights(k) * f(mid + half * nodes(k));
    return s * half;
  }
};

/// Shared, lazily built rules; safe to call concurrently.
template <typename Scalar>
const GaussLegendre<Scalar>& gauss_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, GaussLegendre<Scalar>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, GaussLegendre<Scalar>(n)).first;
  return it->second;
}

/// Composite Gauss-Legendre over `panels` equal panels of [a, b].
template <typename Scalar, typename F>
Scalar integrate_composite(F&& f, Scalar a, Scalar b, int panels, int order) {
  const auto& rule = gauss_legendre<Scalar>(order);
  const Scalar h = (b - a) / panels;
  Scalar s = 0;
  for (int p = 0; p < panels; ++p) s += rule.integrate(f, a + p * h, a + (p + 1) * h);
  return s;
}

}  // namespace thinflow
