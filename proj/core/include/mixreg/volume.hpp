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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace mixreg {

using Vec3 = Eigen::Vector3d;
using Dims = std::array<int, 3>;

struct IntensityRange {
  double min = 0.0;
  double max = 0.0;
  double span() const { return max - min; }
};

/// Dense 3D scalar field on an axis-aligned grid.
///
/// Voxel (i, j, k) sits at physical position origin + (i, j, k) * spacing
/// (millimetres); storage is x-fastest. A Volume is immutable once built and
/// every constructor path validates the invariants (dims >= 2, spacing > 0,
/// finite voxels), so downstream code never re-checks them.
class Volume {
 public:
  Volume(Dims dims, Vec3 spacing, Vec3 origin, std::vector<float> voxels);

  static Volume filled(Dims dims, Vec3 spacing, Vec3 origin, float value);

  const Dims& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  const Vec3& origin() const { return origin_; }
  const IntensityRange& range() const { return range_; }
  std::span<const float> voxels() const { return voxels_; }
  std::size_t size() const { return voxels_.size(); }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * k);
  }
  std::array<int, 3> coords(std::size_t index) const;
  float at(int i, int j, int k) const { return voxels_[index(i, j, k)]; }

  Vec3 position(int i, int j, int k) const {
    return origin_ + Vec3(i, j, k).cwiseProduct(spacing_);
  }
  Vec3 position(std::size_t index) const;

  /// Last voxel centre; together with origin() this bounds the sampled region.
  Vec3 far_corner() const;
  /// Midpoint of the voxel-centre bounding box.
  Vec3 center() const { return 0.5 * (origin_ + far_corner()); }
  /// Physical extent covered by the voxels themselves: dims * spacing.
  Vec3 extent() const;

 private:
  Dims dims_;
  Vec3 spacing_;
  Vec3 origin_;
  std::vector<float> voxels_;
  IntensityRange range_;
};

struct PyramidLevel {
  int r;  // 1 is the finest level
  Volume volume;
};

/// Coarse-to-fine stack; levels[0] is r = 1.
struct Pyramid {
  std::vector<PyramidLevel> levels;

  int level_count() const { return static_cast<int>(levels.size()); }
  const Volume& level(int r) const { return levels.at(static_cast<std::size_t>(r - 1)).volume; }
};

enum class Interpolation { kCatmullRom, kTrilinear };

/// Resample onto an isotropic grid of `target_spacing` mm sharing the input
/// origin. Output dims are ceil(extent / target_spacing); samples beyond the
/// last input voxel centre take the boundary value. Results are clamped to
/// the input intensity range.
Volume resample_isotropic(const Volume& v, double target_spacing,
                          Interpolation method = Interpolation::kCatmullRom);

/// Separable Gaussian blur with per-axis sigma in voxels, truncated at 3 sigma
/// and renormalized; edges replicate.
Volume gaussian_smooth(const Volume& v, const Vec3& sigma_voxels);

/// Spacing of level r in an R-level pyramid: 1mm * 4^((r-1)/(R-1)).
double pyramid_spacing(int r, int level_count);

/// Builds an R-level pyramid from a 1mm isotropic volume. Level r > 1 is the
/// input blurred with sigma = 0.5 * sqrt(ratio^2 - 1) voxels and resampled to
/// pyramid_spacing(r, R).
Pyramid build_pyramid(const Volume& v, int level_count,
                      Interpolation method = Interpolation::kCatmullRom);

/// Gradient magnitude in intensity per mm: central differences in the
/// interior, one-sided differences on boundary slices.
Volume gradient_magnitude(const Volume& v);

/// Trilinear interpolation at a physical point; nullopt outside the
/// voxel-centre bounding box.
std::optional<double> sample_trilinear(const Volume& v, const Vec3& p);

// RVOL1 / NIfTI-1 I/O (volume_io.cpp)

/// Reads RVOL1 or single-file NIfTI-1 (.nii), chosen by magic bytes.
Volume load_volume(const std::filesystem::path& path);
/// Writes RVOL1: "RVOL1\n", a one-line JSON header, then f32le voxels.
/// A non-empty `provenance` (JSON text) is stored under the header key
/// "provenance"; readers ignore it.
void save_volume(const Volume& v, const std::filesystem::path& path, std::string_view provenance = {});

std::vector<std::uint8_t> encode_rvol(const Volume& v, std::string_view provenance = {});
Volume decode_rvol(std::span<const std::uint8_t> bytes);
Volume decode_nifti(std::span<const std::uint8_t> bytes);

}  // namespace mixreg
