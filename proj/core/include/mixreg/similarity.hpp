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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mixreg/transform.hpp"
#include "mixreg/volume.hpp"

namespace mixreg {

struct KernelValue {
  double weight;
  double derivative;
};

/// Hann-windowed sinc: sinc(t) * (0.5 + 0.5 cos(pi t / a)) on |t| < a, zero
/// outside, with its analytic derivative. Radius a must be 1, 2 or 3.
KernelValue hann_sinc(double t, int radius);

/// Histogram configuration. Intensity windows default to each volume's own
/// range; the registration driver pins them to the finest level so bin
/// meaning does not drift across the pyramid.
struct MetricSettings {
  int bins = 64;
  int radius = 2;
  std::optional<IntensityRange> fixed_window;
  std::optional<IntensityRange> moving_window;
};

/// B x B co-occurrence table, row = fixed bin, column = moving bin.
struct JointHistogram {
  int bins = 0;
  std::vector<double> cells;  // bins * bins, row-major
  std::vector<double> marginal_fixed;
  std::vector<double> marginal_moving;
  double total_weight = 0.0;
  std::size_t escaped = 0;

  double at(int fixed_bin, int moving_bin) const {
    return cells[static_cast<std::size_t>(fixed_bin) * bins + moving_bin];
  }
  /// Rebuilds marginals and total from cells.
  void recompute_marginals();
};

struct MetricEvaluation {
  double value = 0.0;
  Vec6 gradient = Vec6::Zero();   // d NMI / d (tx, ty, tz, rx, ry, rz)
  Mat6 curvature = Mat6::Zero();  // sum of per-sample gradient outer products
  std::size_t sample_size = 0;    // samples drawn (before escapes)
  std::size_t escaped = 0;
};

/// Normalized mutual information (H_fixed + H_moving) / H_joint with natural
/// logs; cell probabilities are clamped at 1e-12 inside logarithms. A
/// histogram with zero joint entropy returns 2.
double nmi(const JointHistogram& h);

/// Partial-volume NMI engine for one (fixed, moving) volume pair.
///
/// Samples are fixed-volume voxel centres. Each is mapped through the
/// transform into the moving grid, where a (2a)^3 neighbourhood receives
/// separable windowed-sinc weights renormalized to sum to one. The unit mass
/// lands in the moving bins of those neighbours and is split linearly between
/// the two fixed bins bracketing the sample's own intensity. Samples whose
/// neighbourhood leaves the moving grid are counted as escaped and dropped.
///
/// The engine pre-bins both volumes, so it must not outlive them.
class PartialVolumeMetric {
 public:
  PartialVolumeMetric(const Volume& fixed, const Volume& moving, MetricSettings settings = {});

  const MetricSettings& settings() const { return settings_; }
  const Volume& fixed() const { return fixed_; }
  const Volume& moving() const { return moving_; }

  JointHistogram accumulate(const RigidParams& theta, std::span<const std::uint32_t> idx) const;
  /// NMI only; skips the gradient pass.
  double value(const RigidParams& theta, std::span<const std::uint32_t> idx) const;
  /// NMI, its analytic gradient and the outer-product curvature in one call.
  MetricEvaluation evaluate(const RigidParams& theta, std::span<const std::uint32_t> idx) const;

 private:
  struct AxisWeights {
    int first;  // first neighbour index along the axis
    double w[6];
    double dw[6];  // derivative with respect to the continuous voxel coordinate
  };
  struct Sample {
    Vec3 position;  // fixed-grid physical position
    int fixed_bin;
    double fixed_frac;
    AxisWeights axes[3];
  };

  bool prepare(const RigidParams& theta, const Mat3& rotation, std::uint32_t index, Sample& s) const;

  const Volume& fixed_;
  const Volume& moving_;
  MetricSettings settings_;
  std::vector<std::uint8_t> moving_bins_;
  std::vector<std::uint8_t> fixed_bin_;
  std::vector<float> fixed_frac_;
};

JointHistogram accumulate(const Volume& fixed, const Volume& moving, const RigidParams& theta,
                          std::span<const std::uint32_t> idx, const MetricSettings& settings = {});

MetricEvaluation evaluate(const Volume& fixed, const Volume& moving, const RigidParams& theta,
                          std::span<const std::uint32_t> idx, const MetricSettings& settings = {});

}  // namespace mixreg
