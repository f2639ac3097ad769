/*
 * Copyright 2026 The mixreg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mixreg/transform.hpp"

#include <cmath>

#include "mixreg/error.hpp"

namespace mixreg {
namespace {

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 1, 0, 0, 0, c, -s, 0, s, c;
  return m;
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

// Derivatives of the elementary rotations with respect to their angle.
Mat3 drot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << 0, 0, 0, 0, -s, -c, 0, c, -s;
  return m;
}

Mat3 drot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << -s, 0, c, 0, 0, 0, -c, 0, -s;
  return m;
}

Mat3 drot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 m;
  m << -s, -c, 0, c, -s, 0, 0, 0, 0;
  return m;
}

void require_same_center(const RigidParams& a, const RigidParams& b) {
  if ((a.center - b.center).cwiseAbs().maxCoeff() > 1e-9) {
    throw ParameterError("compose requires transforms sharing the same rotation centre");
  }
}

}  // namespace

RigidParams RigidParams::from_vector(const Vec6& x, const Vec3& center) {
  return {x.head<3>(), x.tail<3>(), center};
}

Vec6 RigidParams::as_vector() const {
  Vec6 x;
  x << t, r;
  return x;
}

Mat3 rotation_matrix(const Vec3& r) { return rot_z(r[2]) * rot_y(r[1]) * rot_x(r[0]); }

Vec3 euler_from_matrix(const Mat3& m) {
  const double cy = std::hypot(m(0, 0), m(1, 0));
  const double ry = std::atan2(-m(2, 0), cy);
  if (cy < 1e-9) {
    // Gimbal lock: only rx - rz (or rx + rz) is observable; pin rz to zero.
    return {std::atan2(-m(1, 2), m(1, 1)), ry, 0.0};
  }
  return {std::atan2(m(2, 1), m(2, 2)), ry, std::atan2(m(1, 0), m(0, 0))};
}

Vec3 apply(const RigidParams& theta, const Vec3& p) {
  return rotation_matrix(theta.r) * (p - theta.center) + theta.center + theta.t;
}

JacobianEvaluator::JacobianEvaluator(const RigidParams& theta) : center_(theta.center) {
  const Mat3 rx = rot_x(theta.r[0]);
  const Mat3 ry = rot_y(theta.r[1]);
  const Mat3 rz = rot_z(theta.r[2]);
  d_rx_ = rz * ry * drot_x(theta.r[0]);
  d_ry_ = rz * drot_y(theta.r[1]) * rx;
  d_rz_ = drot_z(theta.r[2]) * ry * rx;
}

Jacobian JacobianEvaluator::at(const Vec3& p) const {
  const Vec3 d = p - center_;
  Jacobian jac;
  jac.leftCols<3>().setIdentity();
  jac.col(3) = d_rx_ * d;
  jac.col(4) = d_ry_ * d;
  jac.col(5) = d_rz_ * d;
  return jac;
}

Jacobian jacobian(const RigidParams& theta, const Vec3& p) { return JacobianEvaluator(theta).at(p); }

RigidParams compose(const RigidParams& a, const RigidParams& b) {
  require_same_center(a, b);
  const Mat3 ra = rotation_matrix(a.r);
  const Mat3 rb = rotation_matrix(b.r);
  return {ra * b.t + a.t, euler_from_matrix(ra * rb), a.center};
}

RigidParams invert(const RigidParams& theta) {
  const Mat3 rt = rotation_matrix(theta.r).transpose();
  return {-(rt * theta.t), euler_from_matrix(rt), theta.center};
}

}  // namespace mixreg
