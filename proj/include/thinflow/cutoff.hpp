#pragma once

#include <cmath>

#include "thinflow/conformal.hpp"
#include "thinflow/errors.hpp"

namespace thinflow {

/// Smooth step Phi with Phi = 0 on s <= 1 and Phi = 1 on s >= 2, built from
/// the exp(-1/t) partition of unity, composed with the level sets of |T_eps|.
template <typename Scalar>
struct CutoffProfile {
  Scalar lambda = 4;

  CutoffProfile() = default;
  explicit CutoffProfile(Scalar lam) : lambda(lam) {
    if (!(lam >= 2)) throw ConfigError("cutoff lambda must be >= 2");
  }

  static Scalar f(Scalar t) { return t > 0 ? std::exp(-1 / t) : Scalar(0); }

  static Scalar phi(Scalar s) {
    if (s <= 1) return 0;
    if (s >= 2) return 1;
    const Scalar a = f(s - 1), b = f(2 - s);
    return a / (a + b);
  }

  /// Phi((|T_eps(x)| - 1) / lambda) given |T_eps(x)|.
  Scalar of_modulus(Scalar modulus) const { return phi((modulus - 1) / lambda); }
};

template <typename Scalar>
Scalar cutoff_eval(const CutoffProfile<Scalar>& profile, const ObstacleFamily<Scalar>& family,
                   const Complex<Scalar>& x) {
  return profile.of_modulus(std::abs(family.eval(x)));
}

}  // namespace thinflow
