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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "mixreg/bench.hpp"
#include "mixreg/error.hpp"
#include "mixreg/random.hpp"

namespace mixreg {
namespace {

constexpr double kBackground = 40.0;
constexpr double kTissue = 330.0;
constexpr double kShell = 950.0;
constexpr double kDynamicRange = 1000.0;

struct Shape {
  bool box;
  Vec3 center;
  Vec3 half_axes;
  Mat3 to_local;  // world -> shape frame rotation
  double intensity;

  bool contains(const Vec3& p) const {
    const Vec3 q = to_local * (p - center);
    if (box) return (q.cwiseAbs() - half_axes).maxCoeff() <= 0.0;
    return q.cwiseQuotient(half_axes).squaredNorm() <= 1.0;
  }
};

}  // namespace

Volume make_phantom(int size, std::uint64_t seed) {
  if (size < 32) throw ParameterError("phantom size must be >= 32");
  CounterRng rng(seed);
  const Dims dims{size, size, size};
  const double n = size;
  const Vec3 center = Vec3::Constant(0.5 * (n - 1));

  // Head outline: ellipsoid tapered along y and cut flat at the base. An
  // axis-aligned ellipsoid with similar half-axes barely changes under small
  // rotations, which leaves the strongest edges blind to them.
  const Vec3 outer(0.34 * n, 0.29 * n, 0.31 * n);
  const double shell_thickness = std::max(2.0, 0.045 * n);
  const Vec3 inner = outer - Vec3::Constant(shell_thickness);
  const double base_z = -0.62 * outer.z();
  const auto in_head = [](const Vec3& d, const Vec3& axes, double cut) {
    if (d.z() < cut) return false;
    const double taper = 1.0 + 0.22 * std::clamp(d.y() / axes.y(), -1.0, 1.0);
    const Vec3 q(d.x() / (axes.x() * taper), d.y() / axes.y(), d.z() / axes.z());
    return q.squaredNorm() <= 1.0;
  };

  const int shape_count = 8 + static_cast<int>(rng.next_u32() % 5);
  std::vector<double> levels;
  for (int k = 0; k < 12; ++k) levels.push_back(110.0 + 62.0 * k);  // 110 .. 792
  for (std::size_t k = levels.size() - 1; k > 0; --k) {
    std::swap(levels[k], levels[rng.next_u32() % (k + 1)]);
  }
  std::vector<Shape> shapes;
  for (int s = 0; s < shape_count; ++s) {
    Shape shape;
    shape.box = rng.uniform() < 0.5;
    // Centres inside the inner ellipsoid, shrunk so shapes mostly stay inside.
    Vec3 u;
    do {
      u = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    } while (u.squaredNorm() > 1.0);
    shape.center = center + 0.55 * u.cwiseProduct(inner);
    shape.half_axes = Vec3(rng.uniform(0.05, 0.16), rng.uniform(0.05, 0.16), rng.uniform(0.05, 0.16)) * n;
    const Vec3 angles(rng.uniform(-std::numbers::pi, std::numbers::pi), rng.uniform(-0.5, 0.5) * std::numbers::pi,
                      rng.uniform(-std::numbers::pi, std::numbers::pi));
    shape.to_local = rotation_matrix(angles).transpose();
    shape.intensity = levels[static_cast<std::size_t>(s)];
    shapes.push_back(shape);
  }

  std::vector<float> base(static_cast<std::size_t>(size) * size * size);
  std::size_t idx = 0;
  for (int k = 0; k < size; ++k) {
    for (int j = 0; j < size; ++j) {
      for (int i = 0; i < size; ++i, ++idx) {
        const Vec3 p(i, j, k);
        const Vec3 d = p - center;
        double value = kBackground;
        if (in_head(d, outer, base_z)) {
          value = in_head(d, inner, base_z + shell_thickness) ? kTissue : kShell;
          if (value == kTissue) {
            for (const Shape& shape : shapes) {
              if (shape.contains(p)) value = shape.intensity;
            }
          }
        }
        base[idx] = static_cast<float>(value);
      }
    }
  }
  const Volume sharp(dims, Vec3::Ones(), Vec3::Zero(), std::move(base));
  const Volume smooth = gaussian_smooth(sharp, Vec3::Constant(0.6));

  // Texture: white noise blurred to ~1mm correlation length with a standard
  // deviation of 5% of the dynamic range. Without it the gradient mass sits
  // almost entirely on a few sharp edges.
  // Generated on a padded grid and cropped so edge replication in the blur
  // does not inflate the variance near the faces.
  constexpr int kPad = 8;
  const int padded = size + 2 * kPad;
  std::vector<float> noise(static_cast<std::size_t>(padded) * padded * padded);
  for (float& x : noise) x = static_cast<float>(rng.normal());
  const Volume blurred_padded = gaussian_smooth(
      Volume({padded, padded, padded}, Vec3::Ones(), Vec3::Zero(), std::move(noise)), Vec3::Constant(1.0));
  std::vector<float> cropped(smooth.size());
  idx = 0;
  for (int k = 0; k < size; ++k)
    for (int j = 0; j < size; ++j)
      for (int i = 0; i < size; ++i) cropped[idx++] = blurred_padded.at(i + kPad, j + kPad, k + kPad);
  const Volume blurred(dims, Vec3::Ones(), Vec3::Zero(), std::move(cropped));
  double mean = 0.0, sq = 0.0;
  for (float x : blurred.voxels()) {
    mean += x;
    sq += static_cast<double>(x) * x;
  }
  mean /= static_cast<double>(blurred.size());
  const double sd = std::sqrt(std::max(sq / static_cast<double>(blurred.size()) - mean * mean, 1e-30));
  const double amplitude = 0.05 * kDynamicRange;

  std::vector<float> out(smooth.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(smooth.voxels()[i] + amplitude * (blurred.voxels()[i] - mean) / sd);
  }
  return Volume(dims, Vec3::Ones(), Vec3::Zero(), std::move(out));
}

MovingImage make_moving(const Volume& fixed, const RigidParams& gold, const MovingOptions& options,
                        std::uint64_t seed) {
  if (gold.t.cwiseAbs().maxCoeff() > 20.0 || gold.r.cwiseAbs().maxCoeff() > 0.3) {
    throw ParameterError("gold transform too large: need |t_i| <= 20mm and |r_i| <= 0.3rad");
  }
  if (!(options.gamma > 0.0)) throw ParameterError("intensity remap exponent must be > 0");
  if (!(options.noise_sd >= 0.0)) throw ParameterError("noise sd must be >= 0");

  const RigidParams inverse = invert(gold);
  const IntensityRange range = fixed.range();
  const double span = range.span();
  std::vector<float> out(fixed.size());
  std::size_t inside = 0;
  CounterRng rng(seed);
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    const auto value = sample_trilinear(fixed, apply(inverse, fixed.position(idx)));
    double x = range.min;
    if (value) {
      ++inside;
      x = *value;
    }
    if (options.gamma != 1.0 && span > 0.0) {
      const double u = std::clamp((x - range.min) / span, 0.0, 1.0);
      x = range.min + span * std::pow(u, options.gamma);
    }
    if (options.noise_sd > 0.0) x += options.noise_sd * span * rng.normal();
    out[idx] = static_cast<float>(x);
  }
  if (static_cast<double>(inside) < 0.5 * static_cast<double>(out.size())) {
    throw ParameterError("gold transform leaves less than 50% overlap with the fixed volume");
  }
  return {Volume(fixed.dims(), fixed.spacing(), fixed.origin(), std::move(out)), gold};
}

RigidParams random_rigid(CounterRng& rng, double max_translation, double max_rotation, const Vec3& center) {
  Vec3 t;
  do {
    t = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  } while (t.squaredNorm() > 1.0);
  const Vec3 r(rng.uniform(-max_rotation, max_rotation), rng.uniform(-max_rotation, max_rotation),
               rng.uniform(-max_rotation, max_rotation));
  return {max_translation * t, r, center};
}

}  // namespace mixreg
