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
#include <span>
#include <string>
#include <vector>

#include "mixreg/random.hpp"
#include "mixreg/volume.hpp"

namespace mixreg {

enum class SamplerKind { kUrs, kGms, kMixed };

std::string to_string(SamplerKind kind);
SamplerKind sampler_kind_from_string(const std::string& name);

/// Per-voxel Bernoulli selection probabilities for one pyramid level.
///
/// Probabilities sum to expected_count() = min(M, N). Instances are immutable;
/// the constructor also indexes voxels by probability magnitude so draw() can
/// skip geometrically instead of testing every voxel.
class SamplingDistribution {
 public:
  SamplingDistribution(std::vector<double> probs, double expected_count, SamplerKind kind,
                       double beta, int level);

  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double expected_count() const { return expected_count_; }
  SamplerKind kind() const { return kind_; }
  /// Mixing weight on the uniform component; 1 for URS, 0 for GMS.
  double beta() const { return beta_; }
  int level() const { return level_; }

 private:
  friend std::vector<std::uint32_t> draw(const SamplingDistribution&, CounterRng&);

  struct Bucket {
    double bound;                        // every member has prob <= bound
    std::vector<std::uint32_t> members;  // ascending voxel indices
  };

  std::vector<double> probs_;
  double expected_count_;
  SamplerKind kind_;
  double beta_;
  int level_;
  std::vector<Bucket> buckets_;
};

/// Uniform probabilities min(m / n, 1).
SamplingDistribution build_urs(std::size_t n, double m, int level = 1);

/// Probabilities alpha * g[i], with alpha solved so the total is min(m, n).
/// Entries that would exceed 1 are pinned at 1 and alpha is re-solved over the
/// remaining voxels until nothing new clips. Throws DegenerateInputError when
/// g has no positive voxel, or when the positive voxels cannot carry min(m, n).
SamplingDistribution build_gms(std::span<const float> gradient_magnitude, double m, int level = 1);
SamplingDistribution build_gms(const Volume& gradient_magnitude, double m, int level = 1);

/// (1 - beta) * q + beta * u.
SamplingDistribution build_mixed(const SamplingDistribution& u, const SamplingDistribution& q,
                                 double beta);

/// One independent Bernoulli trial per voxel; returns the selected voxel
/// indices in ascending order. Same distribution and stream state give the
/// same set.
std::vector<std::uint32_t> draw(const SamplingDistribution& d, CounterRng& rng);

}  // namespace mixreg
