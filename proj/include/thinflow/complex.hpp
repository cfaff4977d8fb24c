#pragma once

#include <Eigen/Core>
#include <complex>

namespace thinflow {

// The plane is identified with C throughout: a vector (v1, v2) is v1 + i v2.
template <typename Scalar>
using Complex = std::complex<Scalar>;

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using Mat2 = Eigen::Matrix<Scalar, 2, 2>;

template <typename Scalar>
inline Vec2<Scalar> to_vec(const Complex<Scalar>& z) {
  return Vec2<Scalar>(z.real(), z.imag());
}

template <typename Scalar>
inline Complex<Scalar> to_complex(const Vec2<Scalar>& v) {
  return {v(0), v(1)};
}

/// v -> v^perp = (-v2, v1), i.e. multiplication by i.
template <typename Scalar>
inline Complex<Scalar> perp(const Complex<Scalar>& v) {
  return {-v.imag(), v.real()};
}

/// Real 2x2 Jacobian of a holomorphic map with complex derivative d.
template <typename Scalar>
inline Mat2<Scalar> jacobian_matrix(const Complex<Scalar>& d) {
  Mat2<Scalar> m;
  m << d.real(), -d.imag(), d.imag(), d.real();
  return m;
}

template <typename Scalar>
inline Mat2<Scalar> perp_matrix() {
  Mat2<Scalar> m;
  m << Scalar(0), Scalar(-1), Scalar(1), Scalar(0);
  return m;
}

}  // namespace thinflow
