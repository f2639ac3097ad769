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

#include "mixreg/bench.hpp"
#include "mixreg/error.hpp"
#include "mixreg/random.hpp"

namespace mixreg {

double CaseOutcome::mean_tre() const {
  if (tre_per_point.empty()) return 0.0;
  double sum = 0.0;
  for (double t : tre_per_point) sum += t;
  return sum / static_cast<double>(tre_per_point.size());
}

double CaseOutcome::max_tre() const {
  return tre_per_point.empty() ? 0.0 : *std::max_element(tre_per_point.begin(), tre_per_point.end());
}

CaseOutcome evaluate_case(const RigidParams& estimate, const RigidParams& gold,
                          std::span<const Vec3> probes, double failure_threshold) {
  CaseOutcome out;
  out.tre_per_point.reserve(probes.size());
  for (const Vec3& p : probes) out.tre_per_point.push_back((apply(estimate, p) - apply(gold, p)).norm());
  out.failed = out.max_tre() > failure_threshold;
  return out;
}

std::optional<double> trimmed_mtre(std::span<const CaseOutcome> outcomes) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& o : outcomes) {
    if (o.failed) continue;
    sum += o.mean_tre();
    ++count;
  }
  if (count == 0) return std::nullopt;
  return sum / static_cast<double>(count);
}

Volume sampling_mask(const Volume& v, const SamplingDistribution& dist, std::uint64_t seed) {
  if (dist.size() != v.size()) throw ParameterError("mask distribution does not match the volume size");
  CounterRng rng(seed);
  std::vector<float> mask(v.size(), 0.0f);
  for (std::uint32_t i : draw(dist, rng)) mask[i] = 1.0f;
  return Volume(v.dims(), v.spacing(), v.origin(), std::move(mask));
}

void export_mask(const Volume& v, const SamplingDistribution& dist, std::uint64_t seed,
                 const std::filesystem::path& path) {
  save_volume(sampling_mask(v, dist, seed), path);
}

}  // namespace mixreg
