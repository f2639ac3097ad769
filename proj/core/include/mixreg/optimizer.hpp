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
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "mixreg/sampler.hpp"
#include "mixreg/similarity.hpp"
#include "mixreg/transform.hpp"
#include "mixreg/volume.hpp"

namespace mixreg {

/// Trust-region settings. Radii are in scaled parameter units: millimetres
/// for translations, radians times rotation_scale for rotations.
struct OptimizerConfig {
  int max_iters = 50;
  double initial_radius = 1.0;
  double min_radius = 1e-3;
  double expand = 2.0;
  double shrink = 0.25;
  double rho_low = 0.25;
  double rho_high = 0.75;
  double damping = 1e-8;
  /// Millimetres per radian. Non-positive selects half the diagonal of the
  /// fixed volume.
  double rotation_scale = 0.0;

  void validate() const;
};

enum class Termination { kBudget, kRadius };
std::string to_string(Termination t);

struct IterationRecord {
  int iteration = 0;
  std::uint64_t draw_seed = 0;
  std::size_t sample_size = 0;
  std::size_t escaped = 0;
  double radius = 0.0;       // trust radius the step was computed with
  double value = 0.0;        // NMI at the incumbent on this draw
  double trial_value = 0.0;  // NMI at the trial point on the same draw
  double predicted = 0.0;    // model increase of NMI
  double rho = 0.0;
  double step_norm = 0.0;    // scaled units
  bool accepted = false;
};

struct LevelResult {
  int r = 1;
  RigidParams theta;
  int iterations = 0;
  Termination termination = Termination::kBudget;
  double expected_samples = 0.0;
  std::size_t voxels = 0;
  std::vector<IterationRecord> trace;

  double mean_escaped_fraction() const;
};

/// Maximizes sampled NMI at one pyramid level.
///
/// Every iteration draws a fresh sample set (seed derive_seed(seed, {it})),
/// evaluates NMI, gradient and curvature at the incumbent, takes a damped
/// dogleg step inside the trust region and scores the trial point on the same
/// draw. Steps that raise the sampled NMI are accepted. Throws OverlapError
/// when the starting transform leaves no sample inside the moving volume.
LevelResult optimize_level(const PartialVolumeMetric& metric, const SamplingDistribution& dist,
                           const RigidParams& theta0, const OptimizerConfig& cfg,
                           std::uint64_t seed, int level = 1);

LevelResult optimize_level(const Volume& fixed_level, const Volume& moving_level,
                           const SamplingDistribution& dist, const RigidParams& theta0,
                           const OptimizerConfig& cfg, std::uint64_t seed,
                           const MetricSettings& metric = {}, int level = 1);

/// Which sampler drives registration, and for the mixture its per-level
/// weights (betas[r - 1] belongs to level r).
struct SamplerSpec {
  SamplerKind kind = SamplerKind::kUrs;
  std::vector<double> betas;

  double beta_at(int r) const;
  static SamplerSpec mixed_uniform(double beta, int levels) {
    return {SamplerKind::kMixed, std::vector<double>(static_cast<std::size_t>(levels), beta)};
  }
};

struct RegistrationConfig {
  int levels = 4;
  MetricSettings metric;
  OptimizerConfig optimizer;
  Interpolation interpolation = Interpolation::kCatmullRom;
};

struct RegistrationResult {
  RigidParams theta;
  std::vector<LevelResult> levels;  // coarsest first
  SamplerKind sampler = SamplerKind::kUrs;
  std::vector<double> betas;
  double rate = 0.0;
  double samples_per_level = 0.0;  // M = rate * N_1
  std::uint64_t seed = 0;
  double rotation_scale = 0.0;
  double elapsed_seconds = 0.0;
};

/// Pyramids, gradient magnitudes and intensity windows for one image pair.
/// Immutable apart from an internal, mutex-guarded cache of GMS
/// distributions, so one instance can serve concurrent registrations.
class PreparedPair {
 public:
  PreparedPair(Volume fixed, Volume moving, int levels,
               Interpolation interpolation = Interpolation::kCatmullRom);

  int levels() const { return fixed_.level_count(); }
  const Volume& fixed(int r) const { return fixed_.level(r); }
  const Volume& moving(int r) const { return moving_.level(r); }
  const Volume& fixed_gradient(int r) const { return gradients_.at(static_cast<std::size_t>(r - 1)); }
  const IntensityRange& fixed_window() const { return fixed_window_; }
  const IntensityRange& moving_window() const { return moving_window_; }
  /// Rotation centre used for every registration of this pair.
  Vec3 center() const { return fixed(1).center(); }
  double default_rotation_scale() const;

  /// Sampling distribution of the given kind at level r with M expected
  /// samples (capped at N_r).
  SamplingDistribution distribution(int r, SamplerKind kind, double m, double beta) const;

 private:
  std::shared_ptr<const SamplingDistribution> gms(int r, double m) const;

  Pyramid fixed_;
  Pyramid moving_;
  std::vector<Volume> gradients_;
  IntensityRange fixed_window_;
  IntensityRange moving_window_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::pair<int, double>, std::shared_ptr<const SamplingDistribution>> gms_cache_;
};

/// Coarse-to-fine registration from the all-zero transform at level R down
/// to `finest_level`. M = rate * N_1 samples are expected at every level.
RegistrationResult register_prepared(const PreparedPair& pair, const SamplerSpec& sampler,
                                     double rate, const RegistrationConfig& cfg,
                                     std::uint64_t seed, int finest_level = 1);

/// Builds the pyramids and runs register_prepared; both volumes must already
/// be on a 1mm isotropic grid. Timing covers the pyramid construction.
RegistrationResult register_volumes(const Volume& fixed, const Volume& moving,
                                    const SamplerSpec& sampler, double rate,
                                    const RegistrationConfig& cfg, std::uint64_t seed);

}  // namespace mixreg
