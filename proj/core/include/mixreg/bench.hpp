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
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mixreg/optimizer.hpp"
#include "mixreg/sampler.hpp"
#include "mixreg/training.hpp"
#include "mixreg/transform.hpp"
#include "mixreg/volume.hpp"

namespace mixreg {

// --- phantoms -------------------------------------------------------------

/// Seeded 1mm test volume: a bright elliptical shell enclosing 8-12 random
/// ellipsoids and boxes of distinct intensity, over a smooth noise texture.
/// Intensities lie roughly in [0, 1000]. Requires size >= 32.
Volume make_phantom(int size, std::uint64_t seed);

struct MovingImage {
  Volume volume;
  RigidParams gold;
};

struct MovingOptions {
  double gamma = 0.7;     // intensity remap exponent on the normalized range
  double noise_sd = 0.0;  // Gaussian noise, as a fraction of the intensity span
};

/// Moving image whose content at gold(p) is the fixed content at p:
/// the fixed volume pulled back through invert(gold) with trilinear
/// interpolation, intensity-remapped, plus noise. Throws ParameterError for
/// |t| > 20mm, |r| > 0.3rad or less than 50% overlap.
MovingImage make_moving(const Volume& fixed, const RigidParams& gold, const MovingOptions& options,
                        std::uint64_t seed);

/// Random transform about `center`: translation uniform in the ball of radius
/// max_translation, each rotation angle uniform in [-max_rotation, max_rotation].
RigidParams random_rigid(CounterRng& rng, double max_translation, double max_rotation, const Vec3& center);

// --- evaluation ------------------------------------------------------------

constexpr double kDefaultFailureThresholdMm = 10.0;

struct CaseOutcome {
  std::vector<double> tre_per_point;
  bool failed = false;
  double mean_tre() const;
  double max_tre() const;
};

CaseOutcome evaluate_case(const RigidParams& estimate, const RigidParams& gold,
                          std::span<const Vec3> probes,
                          double failure_threshold = kDefaultFailureThresholdMm);

/// Mean TRE over the non-failed outcomes; nullopt when every case failed.
std::optional<double> trimmed_mtre(std::span<const CaseOutcome> outcomes);

// --- sweeps ------------------------------------------------------------------

/// Sampling rates as fractions: 0.02, 0.04, 0.065, 0.1, 0.5 and 1 percent.
std::vector<double> default_rates();

struct SweepSampler {
  std::string name;
  SamplerSpec spec;
};

struct SweepConfig {
  std::vector<double> rates = default_rates();
  int trials = 5;
  RegistrationConfig registration;
  double failure_threshold = kDefaultFailureThresholdMm;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct SweepRow {
  std::string pair_id;
  std::string sampler;
  std::vector<double> betas;  // empty for urs / gms
  double rate = 0.0;
  std::uint64_t trial_seed = 0;
  bool success = false;
  std::optional<double> mtre_mm;
  std::optional<double> max_tre_mm;
  double time_ms = 0.0;
  std::string error;
};

struct AggregateRow {
  std::string sampler;
  double rate = 0.0;
  double failure_rate = 0.0;
  std::optional<double> trimmed_mtre_mm;
  double median_time_ms = 0.0;
};

struct SweepReport {
  int levels = 0;
  std::vector<SweepRow> rows;
  std::vector<AggregateRow> aggregate;
};

/// Seeded registrations for every (pair, sampler, rate, trial). Trial t of
/// pair v uses derive_seed(seed, {v, t}) for all samplers and rates. Rows come
/// back in that nesting order regardless of thread scheduling; a case that
/// throws is recorded as a failure. time_ms covers register_prepared only,
/// the pair's pyramids being shared across cases.
SweepReport sweep(const std::vector<TrainingPair>& pairs, const std::vector<SweepSampler>& samplers,
                  const SweepConfig& cfg);

std::vector<AggregateRow> aggregate_rows(std::span<const SweepRow> rows);

/// CSV writers. `preamble` lines are emitted first, each prefixed by "# ".
void write_sweep_csv(std::ostream& out, const SweepReport& report,
                     const std::vector<std::string>& preamble = {});
void write_aggregate_csv(std::ostream& out, const SweepReport& report,
                         const std::vector<std::string>& preamble = {});

// --- masks -------------------------------------------------------------------

/// Volume on the grid of `v` holding 1 at drawn voxels and 0 elsewhere.
Volume sampling_mask(const Volume& v, const SamplingDistribution& dist, std::uint64_t seed);
void export_mask(const Volume& v, const SamplingDistribution& dist, std::uint64_t seed,
                 const std::filesystem::path& path);

}  // namespace mixreg
