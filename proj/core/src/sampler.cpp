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

#include "mixreg/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mixreg/error.hpp"

namespace mixreg {
namespace {

// Buckets cover (2^-(k+1), 2^-k] for k < kBucketCount - 1; the last bucket
// takes everything smaller.
constexpr int kBucketCount = 48;

int bucket_of(double p) {
  if (p >= 1.0) return 0;
  int exponent = 0;
  const double mantissa = std::frexp(p, &exponent);  // p = mantissa * 2^exponent, mantissa in [0.5, 1)
  // p in (2^-(k+1), 2^-k]  <=>  k = -exponent, except exact powers of two
  // which land one bucket higher.
  int k = mantissa == 0.5 ? 1 - exponent : -exponent;
  return std::clamp(k, 0, kBucketCount - 1);
}

}  // namespace

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::kUrs: return "urs";
    case SamplerKind::kGms: return "gms";
    case SamplerKind::kMixed: return "mixed";
  }
  return "unknown";
}

SamplerKind sampler_kind_from_string(const std::string& name) {
  if (name == "urs") return SamplerKind::kUrs;
  if (name == "gms") return SamplerKind::kGms;
  if (name == "mixed") return SamplerKind::kMixed;
  throw ParameterError("unknown sampler '" + name + "' (expected urs, gms or mixed)");
}

SamplingDistribution::SamplingDistribution(std::vector<double> probs, double expected_count,
                                           SamplerKind kind, double beta, int level)
    : probs_(std::move(probs)), expected_count_(expected_count), kind_(kind), beta_(beta), level_(level) {
  if (probs_.empty()) throw ParameterError("sampling distribution needs at least one voxel");
  if (probs_.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ParameterError("sampling distribution too large for 32-bit voxel indices");
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("sampling probabilities must lie in [0, 1]");
    total += p;
  }
  if (std::abs(total - expected_count_) > 1e-6 * std::max(1.0, expected_count_)) {
    throw ParameterError("sampling probabilities sum to " + std::to_string(total) +
                         ", expected " + std::to_string(expected_count_));
  }
  buckets_.resize(kBucketCount);
  for (int k = 0; k < kBucketCount; ++k) buckets_[static_cast<std::size_t>(k)].bound = std::ldexp(1.0, -k);
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (probs_[i] > 0.0) {
      buckets_[static_cast<std::size_t>(bucket_of(probs_[i]))].members.push_back(static_cast<std::uint32_t>(i));
    }
  }
  std::erase_if(buckets_, [](const Bucket& b) { return b.members.empty(); });
}

SamplingDistribution build_urs(std::size_t n, double m, int level) {
  if (n < 1) throw ParameterError("build_urs needs n >= 1");
  if (!(m > 0.0) || !std::isfinite(m)) throw ParameterError("build_urs needs m > 0");
  const double count = std::min(m, static_cast<double>(n));
  const double p = std::min(m / static_cast<double>(n), 1.0);
  // Summation drift over millions of entries stays far inside the 1e-6 relative check.
  return SamplingDistribution(std::vector<double>(n, p), count, SamplerKind::kUrs, 1.0, level);
}

SamplingDistribution build_gms(std::span<const float> g, double m, int level) {
  if (g.empty()) throw ParameterError("build_gms needs a non-empty gradient field");
  if (!(m > 0.0) || !std::isfinite(m)) throw ParameterError("build_gms needs m > 0");
  const std::size_t n = g.size();
  const double target = std::min(m, static_cast<double>(n));

  std::size_t positive = 0;
  for (float x : g) {
    if (x < 0.0f || !std::isfinite(x)) throw ParameterError("gradient magnitudes must be finite and >= 0");
    if (x > 0.0f) ++positive;
  }
  if (positive == 0) {
    throw DegenerateInputError("gradient field is identically zero; use uniform sampling instead");
  }
  if (target > static_cast<double>(positive) * (1.0 + 1e-12)) {
    throw DegenerateInputError("only " + std::to_string(positive) +
                               " voxels have non-zero gradient, fewer than the requested " +
                               std::to_string(target) + " samples");
  }

  std::vector<char> pinned(n, 0);
  std::size_t pinned_count = 0;
  double alpha = 0.0;
  for (;;) {
    double free_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!pinned[i]) free_sum += g[i];
    }
    const double remaining = target - static_cast<double>(pinned_count);
    alpha = free_sum > 0.0 && remaining > 0.0 ? remaining / free_sum : 0.0;
    std::size_t newly_pinned = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!pinned[i] && g[i] > 0.0f && alpha * g[i] >= 1.0) {
        pinned[i] = 1;
        ++newly_pinned;
      }
    }
    if (newly_pinned == 0) break;
    pinned_count += newly_pinned;
  }

  std::vector<double> probs(n);
  for (std::size_t i = 0; i < n; ++i) probs[i] = pinned[i] ? 1.0 : alpha * g[i];
  return SamplingDistribution(std::move(probs), target, SamplerKind::kGms, 0.0, level);
}

SamplingDistribution build_gms(const Volume& gradient_magnitude, double m, int level) {
  return build_gms(gradient_magnitude.voxels(), m, level);
}

SamplingDistribution build_mixed(const SamplingDistribution& u, const SamplingDistribution& q,
                                 double beta) {
  if (u.kind() != SamplerKind::kUrs || q.kind() != SamplerKind::kGms) {
    throw ParameterError("build_mixed expects a URS and a GMS distribution");
  }
  if (u.size() != q.size() || u.level() != q.level()) {
    throw ParameterError("build_mixed: distributions differ in length or level");
  }
  if (std::abs(u.expected_count() - q.expected_count()) >
      1e-9 * std::max(1.0, u.expected_count())) {
    throw ParameterError("build_mixed: distributions differ in expected count");
  }
  if (!(beta >= 0.0 && beta <= 1.0)) throw ParameterError("mixing weight beta must lie in [0, 1]");
  std::vector<double> probs(u.size());
  const auto up = u.probs();
  const auto qp = q.probs();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = std::min((1.0 - beta) * qp[i] + beta * up[i], 1.0);
  }
  return SamplingDistribution(std::move(probs), u.expected_count(), SamplerKind::kMixed, beta, u.level());
}

std::vector<std::uint32_t> draw(const SamplingDistribution& d, CounterRng& rng) {
  std::vector<std::uint32_t> selected;
  selected.reserve(static_cast<std::size_t>(d.expected_count() * 1.2) + 16);
  const auto probs = d.probs();
  for (const auto& bucket : d.buckets_) {
    const auto& members = bucket.members;
    if (bucket.bound >= 1.0) {
      for (std::uint32_t i : members) {
        const double p = probs[i];
        if (p >= 1.0 || rng.uniform() < p) selected.push_back(i);
      }
      continue;
    }
    // Candidates arrive as Bernoulli(bound) successes via geometric gaps, then
    // are thinned to their own probability.
    const double log_miss = std::log1p(-bucket.bound);
    const auto size = static_cast<double>(members.size());
    double pos = -1.0;
    for (;;) {
      const double gap = std::floor(std::log(rng.uniform_open_closed()) / log_miss);
      pos += gap + 1.0;
      if (pos >= size) break;
      const std::uint32_t i = members[static_cast<std::size_t>(pos)];
      if (rng.uniform() * bucket.bound < probs[i]) selected.push_back(i);
    }
  }
  std::sort(selected.begin(), selected.end());
  return selected;
}

}  // namespace mixreg
