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

#include <doctest.h>

#include <numbers>

#include <Eigen/Geometry>

#include "mixreg/random.hpp"
#include "mixreg/transform.hpp"

using namespace mixreg;

namespace {

RigidParams random_params(CounterRng& rng, const Vec3& center) {
  return {Vec3(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)),
          Vec3(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)), center};
}

Vec3 random_point(CounterRng& rng) {
  return {rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)};
}

// Homogeneous matrix built independently of apply(): T(c + t) * R * T(-c).
Eigen::Matrix4d homogeneous(const RigidParams& p) {
  const double cx = std::cos(p.r[0]), sx = std::sin(p.r[0]);
  const double cy = std::cos(p.r[1]), sy = std::sin(p.r[1]);
  const double cz = std::cos(p.r[2]), sz = std::sin(p.r[2]);
  Mat3 rx, ry, rz;
  rx << 1, 0, 0, 0, cx, -sx, 0, sx, cx;
  ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
  rz << cz, -sz, 0, sz, cz, 0, 0, 0, 1;
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rz * ry * rx;
  m.topRightCorner<3, 1>() = p.center + p.t - rz * ry * rx * p.center;
  return m;
}

}  // namespace

TEST_CASE("apply examples") {
  CounterRng rng(1);
  for (int i = 0; i < 5; ++i) {
    const Vec3 p = random_point(rng);
    CHECK((apply(RigidParams{}, p) - p).norm() == 0.0);
  }
  const RigidParams shift{Vec3(1, 2, 3), Vec3::Zero(), Vec3::Zero()};
  CHECK((apply(shift, Vec3::Zero()) - Vec3(1, 2, 3)).norm() == 0.0);
  const RigidParams rx{Vec3::Zero(), Vec3(std::numbers::pi / 2, 0, 0), Vec3::Zero()};
  CHECK((apply(rx, Vec3(0, 1, 0)) - Vec3(0, 0, 1)).norm() < 1e-12);
}

TEST_CASE("apply matches the homogeneous matrix and preserves distances") {
  CounterRng rng(2);
  for (int i = 0; i < 20; ++i) {
    const RigidParams p = random_params(rng, random_point(rng));
    const Eigen::Matrix4d m = homogeneous(p);
    const Vec3 a = random_point(rng), b = random_point(rng);
    CHECK((apply(p, a) - (m * a.homogeneous()).head<3>()).norm() < 1e-9);
    CHECK(std::abs((apply(p, a) - apply(p, b)).norm() - (a - b).norm()) < 1e-9);
  }
}

TEST_CASE("jacobian") {
  CounterRng rng(3);
  SUBCASE("translation columns are the identity") {
    const RigidParams p = random_params(rng, random_point(rng));
    const Jacobian j = jacobian(p, random_point(rng));
    CHECK((j.leftCols<3>() - Mat3::Identity()).norm() == 0.0);
  }
  SUBCASE("rx column at zero is the cross-product generator") {
    const Jacobian j = jacobian(RigidParams{}, Vec3(0, 1, 0));
    CHECK((j.col(3) - Vec3(0, 0, 1)).norm() < 1e-12);
  }
  SUBCASE("central finite differences") {
    const double h = 1e-6;
    for (int trial = 0; trial < 20; ++trial) {
      const RigidParams p = random_params(rng, random_point(rng));
      const Vec3 x = random_point(rng);
      const Jacobian j = jacobian(p, x);
      const Jacobian j_cached = JacobianEvaluator(p).at(x);
      CHECK((j - j_cached).norm() < 1e-12);
      for (int k = 0; k < 6; ++k) {
        Vec6 plus = p.as_vector(), minus = p.as_vector();
        plus[k] += h;
        minus[k] -= h;
        const Vec3 fd = (apply(RigidParams::from_vector(plus, p.center), x) -
                         apply(RigidParams::from_vector(minus, p.center), x)) /
                        (2 * h);
        CHECK((fd - j.col(k)).cwiseAbs().maxCoeff() <= 1e-5);
      }
    }
  }
}

TEST_CASE("compose") {
  CounterRng rng(4);
  const Vec3 c = random_point(rng);
  const RigidParams a = random_params(rng, c);
  CHECK(compose(a, RigidParams::identity(c)).as_vector().isApprox(a.as_vector(), 1e-12));

  const RigidParams u{Vec3(1, 2, 3), Vec3::Zero(), c}, v{Vec3(-4, 0.5, 2), Vec3::Zero(), c};
  CHECK((compose(u, v).t - Vec3(-3, 2.5, 5)).norm() < 1e-12);
  CHECK(compose(u, v).r.norm() == 0.0);

  for (int trial = 0; trial < 10; ++trial) {
    const RigidParams x = random_params(rng, c), y = random_params(rng, c), z = random_params(rng, c);
    const RigidParams xy = compose(x, y);
    const Eigen::Matrix4d oracle = homogeneous(x) * homogeneous(y);
    const RigidParams left = compose(compose(x, y), z), right = compose(x, compose(y, z));
    for (int i = 0; i < 20; ++i) {
      const Vec3 p = random_point(rng);
      CHECK((apply(xy, p) - apply(x, apply(y, p))).norm() < 1e-9);
      CHECK((apply(xy, p) - (oracle * p.homogeneous()).head<3>()).norm() < 1e-9);
      CHECK((apply(left, p) - apply(right, p)).norm() < 1e-9);
    }
  }
}

TEST_CASE("invert") {
  CounterRng rng(5);
  CHECK(invert(RigidParams{}).as_vector().norm() == 0.0);
  const RigidParams u{Vec3(1, -2, 3), Vec3::Zero(), Vec3(4, 4, 4)};
  CHECK((invert(u).t + u.t).norm() < 1e-12);
  for (int trial = 0; trial < 10; ++trial) {
    const RigidParams p = random_params(rng, random_point(rng));
    const RigidParams q = invert(p);
    for (int i = 0; i < 20; ++i) {
      const Vec3 x = random_point(rng);
      CHECK((apply(q, apply(p, x)) - x).norm() < 1e-9);
    }
  }
}

TEST_CASE("gimbal-degenerate extraction sets rz to zero") {
  const Mat3 r = rotation_matrix(Vec3(0.3, std::numbers::pi / 2, 0.4));
  const Vec3 e = euler_from_matrix(r);
  CHECK(e[2] == 0.0);
  CHECK((rotation_matrix(e) - r).norm() < 1e-9);
}
