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

#pragma once

#include <Eigen/Core>

#include "mixreg/volume.hpp"

namespace mixreg {

using Mat3 = Eigen::Matrix3d;
using Jacobian = Eigen::Matrix<double, 3, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Six-parameter rigid transform about a fixed centre.
///
///   apply(p) = Rz(rz) * Ry(ry) * Rx(rx) * (p - center) + center + t
///
/// Parameter order everywhere a 6-vector appears is (tx, ty, tz, rx, ry, rz);
/// translations in mm, rotations in radians. Angles are stored unwrapped.
struct RigidParams {
  Vec3 t = Vec3::Zero();
  Vec3 r = Vec3::Zero();
  Vec3 center = Vec3::Zero();

  static RigidParams identity(const Vec3& center = Vec3::Zero()) { return {Vec3::Zero(), Vec3::Zero(), center}; }
  static RigidParams from_vector(const Vec6& x, const Vec3& center);
  Vec6 as_vector() const;

  bool operator==(const RigidParams&) const = default;
};

Mat3 rotation_matrix(const Vec3& r);

/// Euler angles (rx, ry, rz) of a rotation in the Rz*Ry*Rx convention. When
/// |cos(ry)| < 1e-9 the decomposition is not unique and rz is set to 0.
Vec3 euler_from_matrix(const Mat3& rotation);

Vec3 apply(const RigidParams& theta, const Vec3& p);

/// d apply / d (tx, ty, tz, rx, ry, rz) at p.
Jacobian jacobian(const RigidParams& theta, const Vec3& p);

/// Caches the rotation-derivative matrices of one parameter vector so the
/// Jacobian can be evaluated at many points without repeated trigonometry.
class JacobianEvaluator {
 public:
  explicit JacobianEvaluator(const RigidParams& theta);
  Jacobian at(const Vec3& p) const;

 private:
  Vec3 center_;
  Mat3 d_rx_, d_ry_, d_rz_;
};

/// apply(compose(a, b), p) == apply(a, apply(b, p)). Both operands must share
/// the same centre.
RigidParams compose(const RigidParams& a, const RigidParams& b);

RigidParams invert(const RigidParams& theta);

}  // namespace mixreg
