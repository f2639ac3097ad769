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

#include "mixreg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mixreg/error.hpp"

namespace mixreg {

Volume::Volume(Dims dims, Vec3 spacing, Vec3 origin, std::vector<float> voxels)
    : dims_(dims), spacing_(spacing), origin_(origin), voxels_(std::move(voxels)) {
  for (int axis = 0; axis < 3; ++axis) {
    if (dims_[axis] < 2) {
      throw ParameterError("volume dims must be >= 2 on every axis (axis " +
                           std::to_string(axis) + " has " + std::to_string(dims_[axis]) + ")");
    }
    if (!(spacing_[axis] > 0.0) || !std::isfinite(spacing_[axis])) {
      throw ParameterError("volume spacing must be finite and > 0");
    }
    if (!std::isfinite(origin_[axis])) throw ParameterError("volume origin must be finite");
  }
  const std::size_t expected = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  if (voxels_.size() != expected) {
    throw ParameterError("voxel count " + std::to_string(voxels_.size()) +
                         " does not match dims product " + std::to_string(expected));
  }
  float lo = voxels_.front();
  float hi = voxels_.front();
  for (std::size_t i = 0; i < voxels_.size(); ++i) {
    const float x = voxels_[i];
    if (!std::isfinite(x)) {
      throw ParameterError("non-finite voxel value at index " + std::to_string(i));
    }
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  range_ = {lo, hi};
}

Volume Volume::filled(Dims dims, Vec3 spacing, Vec3 origin, float value) {
  const std::size_t n = static_cast<std::size_t>(std::max(dims[0], 0)) * std::max(dims[1], 0) *
                        std::max(dims[2], 0);
  return Volume(dims, spacing, origin, std::vector<float>(n, value));
}

std::array<int, 3> Volume::coords(std::size_t index) const {
  const auto nx = static_cast<std::size_t>(dims_[0]);
  const auto ny = static_cast<std::size_t>(dims_[1]);
  return {static_cast<int>(index % nx), static_cast<int>((index / nx) % ny),
          static_cast<int>(index / (nx * ny))};
}

Vec3 Volume::position(std::size_t index) const {
  const auto c = coords(index);
  return position(c[0], c[1], c[2]);
}

Vec3 Volume::far_corner() const {
  return position(dims_[0] - 1, dims_[1] - 1, dims_[2] - 1);
}

Vec3 Volume::extent() const {
  return Vec3(dims_[0], dims_[1], dims_[2]).cwiseProduct(spacing_);
}

namespace {

// Interpolation taps for one output index along one axis.
struct Taps {
  int first;                   // input index of weights[0]
  std::array<double, 4> weights;
  int count;
};

// Catmull-Rom weights for fractional offset f in [0, 1] on samples
// base-1 .. base+2.
std::array<double, 4> catmull_rom_weights(double f) {
  const double f2 = f * f;
  const double f3 = f2 * f;
  return {0.5 * (-f3 + 2.0 * f2 - f), 0.5 * (3.0 * f3 - 5.0 * f2 + 2.0),
          0.5 * (-3.0 * f3 + 4.0 * f2 + f), 0.5 * (f3 - f2)};
}

std::vector<Taps> axis_taps(int n_in, double spacing_in, int n_out, double spacing_out,
                            Interpolation method) {
  std::vector<Taps> taps(static_cast<std::size_t>(n_out));
  for (int i = 0; i < n_out; ++i) {
    double u = i * spacing_out / spacing_in;
    u = std::clamp(u, 0.0, static_cast<double>(n_in - 1));
    int base = std::min(static_cast<int>(std::floor(u)), n_in - 2);
    const double f = u - base;
    Taps& t = taps[static_cast<std::size_t>(i)];
    if (method == Interpolation::kCatmullRom) {
      t.first = base - 1;
      t.weights = catmull_rom_weights(f);
      t.count = 4;
    } else {
      t.first = base;
      t.weights = {1.0 - f, f, 0.0, 0.0};
      t.count = 2;
    }
  }
  return taps;
}

// Reads a line sample with linear extrapolation one step past either end,
// so cubic interpolation reproduces affine data up to the boundary.
inline double line_value(const double* line, std::ptrdiff_t stride, int n, int idx) {
  if (idx < 0) return 2.0 * line[0] - line[stride];
  if (idx >= n) return 2.0 * line[(n - 1) * stride] - line[(n - 2) * stride];
  return line[idx * stride];
}

// Resamples one axis of a dense x-fastest buffer.
std::vector<double> resample_axis(const std::vector<double>& in, Dims dims, int axis,
                                  const std::vector<Taps>& taps, Dims& out_dims) {
  out_dims = dims;
  out_dims[axis] = static_cast<int>(taps.size());
  const std::ptrdiff_t stride_in[3] = {1, dims[0], static_cast<std::ptrdiff_t>(dims[0]) * dims[1]};
  const std::ptrdiff_t stride_out[3] = {1, out_dims[0],
                                        static_cast<std::ptrdiff_t>(out_dims[0]) * out_dims[1]};
  std::vector<double> out(static_cast<std::size_t>(out_dims[0]) * out_dims[1] * out_dims[2]);
  const int n = dims[axis];
  const int a1 = (axis + 1) % 3;
  const int a2 = (axis + 2) % 3;
  for (int q = 0; q < dims[a2]; ++q) {
    for (int p = 0; p < dims[a1]; ++p) {
      const double* line = in.data() + p * stride_in[a1] + q * stride_in[a2];
      double* dst = out.data() + p * stride_out[a1] + q * stride_out[a2];
      for (std::size_t i = 0; i < taps.size(); ++i) {
        const Taps& t = taps[i];
        double acc = 0.0;
        for (int w = 0; w < t.count; ++w) {
          acc += t.weights[w] * line_value(line, stride_in[axis], n, t.first + w);
        }
        dst[static_cast<std::ptrdiff_t>(i) * stride_out[axis]] = acc;
      }
    }
  }
  return out;
}

std::vector<double> to_double(const Volume& v) {
  return {v.voxels().begin(), v.voxels().end()};
}

Volume from_double(const std::vector<double>& data, Dims dims, Vec3 spacing, Vec3 origin,
                   IntensityRange clamp) {
  std::vector<float> voxels(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    voxels[i] = static_cast<float>(std::clamp(data[i], clamp.min, clamp.max));
  }
  return Volume(dims, spacing, origin, std::move(voxels));
}

Volume resample_to_spacing(const Volume& v, const Vec3& target, const Dims& out_dims_wanted,
                           Interpolation method) {
  std::vector<double> data = to_double(v);
  Dims dims = v.dims();
  for (int axis = 0; axis < 3; ++axis) {
    const auto taps =
        axis_taps(dims[axis], v.spacing()[axis], out_dims_wanted[axis], target[axis], method);
    Dims next;
    data = resample_axis(data, dims, axis, taps, next);
    dims = next;
  }
  return from_double(data, dims, target, v.origin(), v.range());
}

}  // namespace

Volume resample_isotropic(const Volume& v, double target_spacing, Interpolation method) {
  if (!(target_spacing > 0.0) || !std::isfinite(target_spacing)) {
    throw ParameterError("target spacing must be > 0");
  }
  Dims out{};
  const Vec3 extent = v.extent();
  for (int axis = 0; axis < 3; ++axis) {
    // Guard against ceil(96.0000000001) style round-off.
    const double ratio = extent[axis] / target_spacing;
    out[axis] = std::max(2, static_cast<int>(std::ceil(ratio - 1e-9)));
  }
  return resample_to_spacing(v, Vec3::Constant(target_spacing), out, method);
}

Volume gaussian_smooth(const Volume& v, const Vec3& sigma_voxels) {
  std::vector<double> data = to_double(v);
  const Dims dims = v.dims();
  for (int axis = 0; axis < 3; ++axis) {
    const double sigma = sigma_voxels[axis];
    if (!(sigma > 0.0)) continue;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      const double w = std::exp(-0.5 * k * k / (sigma * sigma));
      kernel[static_cast<std::size_t>(k + radius)] = w;
      total += w;
    }
    for (double& w : kernel) w /= total;

    const std::ptrdiff_t stride[3] = {1, dims[0], static_cast<std::ptrdiff_t>(dims[0]) * dims[1]};
    const int n = dims[axis];
    const int a1 = (axis + 1) % 3;
    const int a2 = (axis + 2) % 3;
    std::vector<double> out(data.size());
    std::vector<double> line(static_cast<std::size_t>(n));
    for (int q = 0; q < dims[a2]; ++q) {
      for (int p = 0; p < dims[a1]; ++p) {
        const std::ptrdiff_t base = p * stride[a1] + q * stride[a2];
        for (int i = 0; i < n; ++i) line[static_cast<std::size_t>(i)] = data[base + i * stride[axis]];
        for (int i = 0; i < n; ++i) {
          double acc = 0.0;
          for (int k = -radius; k <= radius; ++k) {
            const int src = std::clamp(i + k, 0, n - 1);
            acc += kernel[static_cast<std::size_t>(k + radius)] * line[static_cast<std::size_t>(src)];
          }
          out[base + i * stride[axis]] = acc;
        }
      }
    }
    data = std::move(out);
  }
  return from_double(data, dims, v.spacing(), v.origin(), v.range());
}

double pyramid_spacing(int r, int level_count) {
  if (level_count <= 1) return 1.0;
  return std::pow(4.0, static_cast<double>(r - 1) / static_cast<double>(level_count - 1));
}

Pyramid build_pyramid(const Volume& v, int level_count, Interpolation method) {
  if (level_count < 1) throw ParameterError("pyramid level count must be >= 1");
  for (int axis = 0; axis < 3; ++axis) {
    if (std::abs(v.spacing()[axis] - 1.0) > 1e-6) {
      throw ParameterError("build_pyramid expects a 1mm isotropic volume; resample first");
    }
  }
  Pyramid pyramid;
  pyramid.levels.reserve(static_cast<std::size_t>(level_count));
  pyramid.levels.push_back({1, v});
  for (int r = 2; r <= level_count; ++r) {
    const double spacing = pyramid_spacing(r, level_count);
    const double sigma = 0.5 * std::sqrt(spacing * spacing - 1.0);
    const Volume smoothed = gaussian_smooth(v, Vec3::Constant(sigma));
    pyramid.levels.push_back({r, resample_isotropic(smoothed, spacing, method)});
  }
  return pyramid;
}

Volume gradient_magnitude(const Volume& v) {
  const Dims& d = v.dims();
  const auto src = v.voxels();
  std::vector<float> out(v.size());
  const std::ptrdiff_t stride[3] = {1, d[0], static_cast<std::ptrdiff_t>(d[0]) * d[1]};
  for (int k = 0; k < d[2]; ++k) {
    for (int j = 0; j < d[1]; ++j) {
      for (int i = 0; i < d[0]; ++i) {
        const int ijk[3] = {i, j, k};
        const std::size_t idx = v.index(i, j, k);
        double sum_sq = 0.0;
        for (int axis = 0; axis < 3; ++axis) {
          const int c = ijk[axis];
          const std::ptrdiff_t s = stride[axis];
          double diff;
          if (c == 0) {
            diff = (static_cast<double>(src[idx + s]) - src[idx]) / v.spacing()[axis];
          } else if (c == d[axis] - 1) {
            diff = (static_cast<double>(src[idx]) - src[idx - s]) / v.spacing()[axis];
          } else {
            diff = (static_cast<double>(src[idx + s]) - src[idx - s]) / (2.0 * v.spacing()[axis]);
          }
          sum_sq += diff * diff;
        }
        out[idx] = static_cast<float>(std::sqrt(sum_sq));
      }
    }
  }
  return Volume(d, v.spacing(), v.origin(), std::move(out));
}

std::optional<double> sample_trilinear(const Volume& v, const Vec3& p) {
  constexpr double kEdgeTolerance = 1e-9;
  int base[3];
  double frac[3];
  for (int axis = 0; axis < 3; ++axis) {
    double c = (p[axis] - v.origin()[axis]) / v.spacing()[axis];
    const int n = v.dims()[axis];
    if (!(c >= -kEdgeTolerance && c <= n - 1 + kEdgeTolerance)) return std::nullopt;
    c = std::clamp(c, 0.0, static_cast<double>(n - 1));
    base[axis] = std::min(static_cast<int>(std::floor(c)), n - 2);
    frac[axis] = c - base[axis];
  }
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    const double wz = dz ? frac[2] : 1.0 - frac[2];
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? frac[1] : 1.0 - frac[1];
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? frac[0] : 1.0 - frac[0];
        acc += wx * wy * wz * v.at(base[0] + dx, base[1] + dy, base[2] + dz);
      }
    }
  }
  return acc;
}

}  // namespace mixreg
