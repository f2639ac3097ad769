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

#include "mixreg/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mixreg/error.hpp"

namespace mixreg {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLogClamp = 1e-12;

// -p log p with the logarithm argument clamped, and its derivative.
inline double entropy_term(double p) { return -p * std::log(std::max(p, kLogClamp)); }
inline double entropy_term_derivative(double p) {
  return p >= kLogClamp ? -(std::log(p) + 1.0) : -std::log(kLogClamp);
}

struct Entropies {
  double fixed = 0.0;
  double moving = 0.0;
  double joint = 0.0;
};

Entropies entropies(const JointHistogram& h) {
  const double total = h.total_weight;
  Entropies e;
  for (double c : h.cells) e.joint += entropy_term(c / total);
  for (double c : h.marginal_fixed) e.fixed += entropy_term(c / total);
  for (double c : h.marginal_moving) e.moving += entropy_term(c / total);
  return e;
}

// Joint entropies this small only arise from a single occupied cell.
constexpr double kDegenerateJointEntropy = 1e-14;

std::uint8_t bin_nearest(double x, const IntensityRange& w, int bins) {
  if (w.span() <= 0.0) return 0;
  const double pos = std::clamp((x - w.min) / w.span() * (bins - 1), 0.0, bins - 1.0);
  return static_cast<std::uint8_t>(std::lround(pos));
}

}  // namespace

KernelValue hann_sinc(double t, int radius) {
  if (radius < 1 || radius > 3) {
    throw ParameterError("kernel radius must be 1, 2 or 3 (got " + std::to_string(radius) + ")");
  }
  const double a = radius;
  if (std::abs(t) >= a) return {0.0, 0.0};
  double sinc, dsinc;
  const double x = kPi * t;
  if (std::abs(t) < 1e-4) {
    sinc = 1.0 - x * x / 6.0;
    dsinc = kPi * (-x / 3.0 + x * x * x / 30.0);
  } else {
    sinc = std::sin(x) / x;
    dsinc = kPi * (x * std::cos(x) - std::sin(x)) / (x * x);
  }
  const double phase = kPi * t / a;
  const double window = 0.5 + 0.5 * std::cos(phase);
  const double dwindow = -0.5 * (kPi / a) * std::sin(phase);
  return {sinc * window, dsinc * window + sinc * dwindow};
}

void JointHistogram::recompute_marginals() {
  marginal_fixed.assign(static_cast<std::size_t>(bins), 0.0);
  marginal_moving.assign(static_cast<std::size_t>(bins), 0.0);
  total_weight = 0.0;
  for (int k = 0; k < bins; ++k) {
    for (int l = 0; l < bins; ++l) {
      const double c = at(k, l);
      marginal_fixed[static_cast<std::size_t>(k)] += c;
      marginal_moving[static_cast<std::size_t>(l)] += c;
    }
  }
  for (double m : marginal_fixed) total_weight += m;
}

double nmi(const JointHistogram& h) {
  if (!(h.total_weight > 0.0)) {
    throw DegenerateHistogramError("joint histogram carries no mass");
  }
  const Entropies e = entropies(h);
  if (e.joint <= kDegenerateJointEntropy) return 2.0;
  return (e.fixed + e.moving) / e.joint;
}

PartialVolumeMetric::PartialVolumeMetric(const Volume& fixed, const Volume& moving,
                                         MetricSettings settings)
    : fixed_(fixed), moving_(moving), settings_(std::move(settings)) {
  if (settings_.bins < 8 || settings_.bins > 256) {
    throw ParameterError("histogram bin count must be in [8, 256]");
  }
  hann_sinc(0.0, settings_.radius);  // validates the radius
  const IntensityRange fw = settings_.fixed_window.value_or(fixed.range());
  const IntensityRange mw = settings_.moving_window.value_or(moving.range());
  const int bins = settings_.bins;

  moving_bins_.resize(moving.size());
  const auto mv = moving.voxels();
  for (std::size_t i = 0; i < mv.size(); ++i) moving_bins_[i] = bin_nearest(mv[i], mw, bins);

  fixed_bin_.resize(fixed.size());
  fixed_frac_.resize(fixed.size());
  const auto fv = fixed.voxels();
  for (std::size_t i = 0; i < fv.size(); ++i) {
    double pos = fw.span() > 0.0 ? (fv[i] - fw.min) / fw.span() * (bins - 1) : 0.0;
    pos = std::clamp(pos, 0.0, bins - 1.0);
    const int k0 = std::min(static_cast<int>(std::floor(pos)), bins - 2);
    fixed_bin_[i] = static_cast<std::uint8_t>(k0);
    fixed_frac_[i] = static_cast<float>(pos - k0);
  }
}

bool PartialVolumeMetric::prepare(const RigidParams& theta, const Mat3& rotation,
                                  std::uint32_t index, Sample& s) const {
  const int a = settings_.radius;
  const int taps = 2 * a;
  s.position = fixed_.position(index);
  s.fixed_bin = fixed_bin_[index];
  s.fixed_frac = fixed_frac_[index];
  const Vec3 mapped = rotation * (s.position - theta.center) + theta.center + theta.t;
  for (int axis = 0; axis < 3; ++axis) {
    const double c = (mapped[axis] - moving_.origin()[axis]) / moving_.spacing()[axis];
    if (!std::isfinite(c)) return false;
    const double base = std::floor(c);
    if (base - a + 1 < 0.0 || base + a > moving_.dims()[axis] - 1.0) return false;
    const double f = c - base;
    AxisWeights& aw = s.axes[axis];
    aw.first = static_cast<int>(base) - a + 1;
    double sum = 0.0, dsum = 0.0;
    for (int j = 0; j < taps; ++j) {
      const KernelValue kv = hann_sinc(f + a - 1 - j, a);
      aw.w[j] = kv.weight;
      aw.dw[j] = kv.derivative;
      sum += kv.weight;
      dsum += kv.derivative;
    }
    for (int j = 0; j < taps; ++j) {
      aw.dw[j] = (aw.dw[j] * sum - aw.w[j] * dsum) / (sum * sum);
      aw.w[j] /= sum;
    }
  }
  return true;
}

JointHistogram PartialVolumeMetric::accumulate(const RigidParams& theta,
                                               std::span<const std::uint32_t> idx) const {
  if (idx.empty()) throw DegenerateHistogramError("empty sample set");
  const int bins = settings_.bins;
  const int taps = 2 * settings_.radius;
  const Mat3 rotation = rotation_matrix(theta.r);
  const auto nx = static_cast<std::size_t>(moving_.dims()[0]);
  const std::size_t nxy = nx * static_cast<std::size_t>(moving_.dims()[1]);

  JointHistogram h;
  h.bins = bins;
  h.cells.assign(static_cast<std::size_t>(bins) * bins, 0.0);
  Sample s;
  for (std::uint32_t index : idx) {
    if (index >= fixed_.size()) throw ParameterError("sample index outside the fixed volume");
    if (!prepare(theta, rotation, index, s)) {
      ++h.escaped;
      continue;
    }
    double* row0 = h.cells.data() + static_cast<std::size_t>(s.fixed_bin) * bins;
    double* row1 = row0 + bins;
    const double f1 = s.fixed_frac;
    const double f0 = 1.0 - f1;
    const AxisWeights& ax = s.axes[0];
    const AxisWeights& ay = s.axes[1];
    const AxisWeights& az = s.axes[2];
    for (int z = 0; z < taps; ++z) {
      for (int y = 0; y < taps; ++y) {
        const double wyz = ay.w[y] * az.w[z];
        const std::uint8_t* line = moving_bins_.data() + static_cast<std::size_t>(az.first + z) * nxy +
                                   static_cast<std::size_t>(ay.first + y) * nx +
                                   static_cast<std::size_t>(ax.first);
        for (int x = 0; x < taps; ++x) {
          const double w = ax.w[x] * wyz;
          const std::uint8_t l = line[x];
          row0[l] += f0 * w;
          row1[l] += f1 * w;
        }
      }
    }
  }
  h.recompute_marginals();
  return h;
}

double PartialVolumeMetric::value(const RigidParams& theta, std::span<const std::uint32_t> idx) const {
  return nmi(accumulate(theta, idx));
}

MetricEvaluation PartialVolumeMetric::evaluate(const RigidParams& theta,
                                               std::span<const std::uint32_t> idx) const {
  const JointHistogram h = accumulate(theta, idx);
  MetricEvaluation out;
  out.value = nmi(h);
  out.sample_size = idx.size();
  out.escaped = h.escaped;

  const Entropies e = entropies(h);
  if (e.joint <= kDegenerateJointEntropy) return out;

  // d NMI / d cell, holding the total mass fixed (every retained sample
  // carries exactly unit mass, so only the distribution over cells moves).
  const int bins = settings_.bins;
  const double total = h.total_weight;
  const double scale = 1.0 / (total * e.joint * e.joint);
  std::vector<double> dcell(h.cells.size());
  for (int k = 0; k < bins; ++k) {
    for (int l = 0; l < bins; ++l) {
      const double dm = entropy_term_derivative(h.marginal_moving[static_cast<std::size_t>(l)] / total);
      const double dj = entropy_term_derivative(h.at(k, l) / total);
      dcell[static_cast<std::size_t>(k) * bins + l] = (dm * e.joint - (e.fixed + e.moving) * dj) * scale;
    }
  }

  const int taps = 2 * settings_.radius;
  const Mat3 rotation = rotation_matrix(theta.r);
  const auto nx = static_cast<std::size_t>(moving_.dims()[0]);
  const std::size_t nxy = nx * static_cast<std::size_t>(moving_.dims()[1]);
  const Vec3 inv_spacing = moving_.spacing().cwiseInverse();
  const JacobianEvaluator jacobian_at(theta);

  Sample s;
  for (std::uint32_t index : idx) {
    if (!prepare(theta, rotation, index, s)) continue;
    const double* d0 = dcell.data() + static_cast<std::size_t>(s.fixed_bin) * bins;
    const double* d1 = d0 + bins;
    const double f1 = s.fixed_frac;
    const double f0 = 1.0 - f1;
    const AxisWeights& ax = s.axes[0];
    const AxisWeights& ay = s.axes[1];
    const AxisWeights& az = s.axes[2];
    Vec3 grad_voxel = Vec3::Zero();
    for (int z = 0; z < taps; ++z) {
      for (int y = 0; y < taps; ++y) {
        const std::uint8_t* line = moving_bins_.data() + static_cast<std::size_t>(az.first + z) * nxy +
                                   static_cast<std::size_t>(ay.first + y) * nx +
                                   static_cast<std::size_t>(ax.first);
        const double wyz = ay.w[y] * az.w[z];
        const double dy_z = ay.dw[y] * az.w[z];
        const double y_dz = ay.w[y] * az.dw[z];
        double gx = 0.0, sx = 0.0;
        for (int x = 0; x < taps; ++x) {
          const std::uint8_t l = line[x];
          const double c = f0 * d0[l] + f1 * d1[l];
          gx += c * ax.dw[x];
          sx += c * ax.w[x];
        }
        grad_voxel[0] += gx * wyz;
        grad_voxel[1] += sx * dy_z;
        grad_voxel[2] += sx * y_dz;
      }
    }
    const Vec3 grad_mm = grad_voxel.cwiseProduct(inv_spacing);
    const Vec6 g = jacobian_at.at(s.position).transpose() * grad_mm;
    out.gradient += g;
    out.curvature.selfadjointView<Eigen::Lower>().rankUpdate(g);
  }
  out.curvature.triangularView<Eigen::StrictlyUpper>() = out.curvature.transpose();
  return out;
}

JointHistogram accumulate(const Volume& fixed, const Volume& moving, const RigidParams& theta,
                          std::span<const std::uint32_t> idx, const MetricSettings& settings) {
  return PartialVolumeMetric(fixed, moving, settings).accumulate(theta, idx);
}

MetricEvaluation evaluate(const Volume& fixed, const Volume& moving, const RigidParams& theta,
                          std::span<const std::uint32_t> idx, const MetricSettings& settings) {
  return PartialVolumeMetric(fixed, moving, settings).evaluate(theta, idx);
}

}  // namespace mixreg
