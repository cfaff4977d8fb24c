#pragma once

#include <cmath>
#include <vector>

#include "thinflow/bump.hpp"
#include "thinflow/complex.hpp"
#include "thinflow/errors.hpp"

namespace thinflow {

/// Rectangle sampled at the midpoints of an n x n cell grid. Nodes within
/// `delta` of the plate are masked out; the patch norm then integrates over
/// the remaining cells.
template <typename Scalar>
struct ProbePatch {
  Scalar x_min = -2, x_max = 2, y_min = -2, y_max = 2;
  Scalar delta = Scalar(0.2);
  int n = 128;

  void validate() const {
    if (!(delta > 0)) throw ConfigError("patch delta must be > 0");
    if (!(x_max > x_min && y_max > y_min)) throw ConfigError("patch bounds are empty");
    if (n < 2) throw ConfigError("patch resolution must be >= 2");
  }

  Scalar hx() const { return (x_max - x_min) / n; }
  Scalar hy() const { return (y_max - y_min) / n; }
  Scalar cell_area() const { return hx() * hy(); }

  Complex<Scalar> node(int i, int j) const {
    return {x_min + (i + Scalar(0.5)) * hx(), y_min + (j + Scalar(0.5)) * hy()};
  }

  bool active(const Complex<Scalar>& p) const {
    Bump<Scalar> probe{p, 0, 0};
    return BumpVorticity<Scalar>::distance_to_segment(probe) > delta;
  }

  /// Active nodes in row-major (i over x, j over y) order.
  std::vector<Complex<Scalar>> nodes() const {
    validate();
    std::vector<Complex<Scalar>> out;
    out.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (active(node(i, j))) out.push_back(node(i, j));
    return out;
  }
};

/// Midpoint L2 norm over the patch of the difference of two sample vectors
/// taken on ProbePatch::nodes().
template <typename Scalar>
Scalar l2_patch_distance(const ProbePatch<Scalar>& patch, const std::vector<Complex<Scalar>>& a,
                         const std::vector<Complex<Scalar>>& b) {
  if (a.size() != b.size()) throw DomainError("patch samples do not cover the same nodes");
  Scalar s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::norm(a[k] - b[k]);
  return std::sqrt(s * patch.cell_area());
}

template <typename Scalar>
Scalar l2_patch_norm(const ProbePatch<Scalar>& patch, const std::vector<Complex<Scalar>>& a) {
  return l2_patch_distance(patch, a, std::vector<Complex<Scalar>>(a.size()));
}

}  // namespace thinflow
