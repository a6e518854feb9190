#pragma once

#include "rvparc/common.hpp"

#include <cmath>

namespace rvparc::so3 {

// Below this rotation angle the closed forms switch to their Taylor series.
inline constexpr double kSmallAngle = 1e-4;

// exp([v]_x) by Rodrigues' formula.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 3, 3> exp(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  using std::cos;
  using std::sin;
  using std::sqrt;
  const S theta2 = v.squaredNorm();
  const S theta = sqrt(theta2);
  S a, b;  // sin(t)/t, (1 - cos(t))/t^2
  if (theta < S(kSmallAngle)) {
    a = S(1) - theta2 / S(6);
    b = S(0.5) - theta2 / S(24);
  } else {
    a = sin(theta) / theta;
    b = (S(1) - cos(theta)) / theta2;
  }
  const Eigen::Matrix<S, 3, 3> w = hat(v);
  return Eigen::Matrix<S, 3, 3>::Identity() + a * w + b * w * w;
}

// d(exp([v]_x) u) / dv, closed form
//   -R [u]_x (v v^T + (R^T - I) [v]_x) / |v|^2.
template <typename DerivedV, typename DerivedU>
Eigen::Matrix<typename DerivedV::Scalar, 3, 3> dexp(const Eigen::MatrixBase<DerivedV>& v,
                                                     const Eigen::MatrixBase<DerivedU>& u) {
  using S = typename DerivedV::Scalar;
  using M3 = Eigen::Matrix<S, 3, 3>;
  const S theta2 = v.squaredNorm();
  if (std::sqrt(theta2) < S(kSmallAngle)) {
    const Eigen::Matrix<S, 3, 1> vu = v.cross(u);
    return -hat(u) - S(0.5) * (hat(vu) + hat(v) * hat(u));
  }
  const M3 r = exp(v);
  const M3 vx = hat(v);
  return -r * hat(u) * (v * v.transpose() + (r.transpose() - M3::Identity()) * vx) / theta2;
}

// Rotation vector of a rotation matrix (angle in [0, pi]).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 3, 1> log(const Eigen::MatrixBase<Derived>& r) {
  using S = typename Derived::Scalar;
  const Eigen::AngleAxis<S> aa{Eigen::Matrix<S, 3, 3>(r)};
  return aa.angle() * aa.axis();
}

// Rotation by angle t about a coordinate axis (0 = x, 1 = y, 2 = z).
template <typename S = double>
Eigen::Matrix<S, 3, 3> axis_rotation(int axis, S t) {
  return Eigen::AngleAxis<S>(t, Eigen::Matrix<S, 3, 1>::Unit(axis)).toRotationMatrix();
}

}  // namespace rvparc::so3
