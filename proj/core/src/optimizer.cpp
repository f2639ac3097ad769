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

#include "mixreg/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

#include "mixreg/error.hpp"
#include "mixreg/random.hpp"

namespace mixreg {
namespace {

// Multiplier on the count-scaled outer-product curvature. Against central
// differences of the full-sample NMI the translation block came out 2-10x too
// flat; 2 keeps rotation steps from being damped away.
constexpr double kCurvatureGain = 2.0;

// Damped dogleg step for the quadratic model g.p + 0.5 p.B.p within |p| <= radius.
Vec6 dogleg_step(const Mat6& b, const Vec6& g, double radius) {
  const double g_norm = g.norm();
  if (g_norm == 0.0) return Vec6::Zero();
  const Vec6 steepest = -radius / g_norm * g;

  const Eigen::LDLT<Mat6> ldlt(b);
  const double gbg = g.dot(b * g);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(gbg > 0.0)) return steepest;

  const Vec6 newton = -ldlt.solve(g);
  if (!newton.allFinite()) return steepest;
  if (newton.norm() <= radius) return newton;

  const Vec6 cauchy = -(g.squaredNorm() / gbg) * g;
  const double cauchy_norm = cauchy.norm();
  if (cauchy_norm >= radius) return steepest;

  // Walk from the Cauchy point toward the Newton point until the boundary.
  const Vec6 d = newton - cauchy;
  const double a = d.squaredNorm();
  const double bq = 2.0 * cauchy.dot(d);
  const double c = cauchy_norm * cauchy_norm - radius * radius;
  const double tau = (-bq + std::sqrt(bq * bq - 4.0 * a * c)) / (2.0 * a);
  return cauchy + tau * d;
}

RigidParams step_params(const RigidParams& theta, const Vec6& scaled_step, double rotation_scale) {
  RigidParams out = theta;
  out.t += scaled_step.head<3>();
  out.r += scaled_step.tail<3>() / rotation_scale;
  return out;
}

}  // namespace

void OptimizerConfig::validate() const {
  if (max_iters < 0) throw ParameterError("max_iters must be >= 0");
  if (!(min_radius > 0.0 && min_radius < initial_radius)) {
    throw ParameterError("need 0 < min_radius < initial_radius");
  }
  if (!(shrink > 0.0 && shrink < 1.0 && expand > 1.0)) {
    throw ParameterError("need 0 < shrink < 1 < expand");
  }
  if (!(rho_low >= 0.0 && rho_low < rho_high)) throw ParameterError("need 0 <= rho_low < rho_high");
  if (!(damping >= 0.0)) throw ParameterError("damping must be >= 0");
}

std::string to_string(Termination t) { return t == Termination::kRadius ? "radius" : "budget"; }

double LevelResult::mean_escaped_fraction() const {
  double sum = 0.0;
  int count = 0;
  for (const auto& rec : trace) {
    if (rec.sample_size == 0) continue;
    sum += static_cast<double>(rec.escaped) / static_cast<double>(rec.sample_size);
    ++count;
  }
  return count ? sum / count : 0.0;
}

LevelResult optimize_level(const PartialVolumeMetric& metric, const SamplingDistribution& dist,
                           const RigidParams& theta0, const OptimizerConfig& cfg,
                           std::uint64_t seed, int level) {
  cfg.validate();
  if (dist.size() != metric.fixed().size()) {
    throw ParameterError("sampling distribution does not match the fixed level voxel count");
  }
  const double rotation_scale =
      cfg.rotation_scale > 0.0
          ? cfg.rotation_scale
          : 0.5 * (metric.fixed().far_corner() - metric.fixed().origin()).norm();
  Vec6 unscale;  // scaled -> natural parameter units
  unscale << 1.0, 1.0, 1.0, 1.0 / rotation_scale, 1.0 / rotation_scale, 1.0 / rotation_scale;

  LevelResult result;
  result.r = level;
  result.theta = theta0;
  result.expected_samples = dist.expected_count();
  result.voxels = dist.size();

  RigidParams theta = theta0;
  double radius = cfg.initial_radius;
  bool overlap_confirmed = false;
  for (int it = 0; it < cfg.max_iters; ++it) {
    IterationRecord rec;
    rec.iteration = it;
    rec.draw_seed = derive_seed(seed, {static_cast<std::uint64_t>(it)});
    rec.radius = radius;
    CounterRng rng(rec.draw_seed);
    const std::vector<std::uint32_t> idx = draw(dist, rng);
    rec.sample_size = idx.size();
    result.iterations = it + 1;

    bool accepted = false;
    double rho = -std::numeric_limits<double>::infinity();
    if (!idx.empty()) {
      MetricEvaluation ev;
      bool have_eval = true;
      try {
        ev = metric.evaluate(theta, idx);
      } catch (const DegenerateHistogramError&) {
        have_eval = false;
        rec.escaped = idx.size();
      }
      if (!have_eval && !overlap_confirmed) {
        throw OverlapError("no sample of level " + std::to_string(level) +
                           " maps inside the moving volume at the initial transform");
      }
      if (have_eval) {
        overlap_confirmed = true;
        rec.escaped = ev.escaped;
        rec.value = ev.value;
        // Minimize -NMI in scaled units.
        const Vec6 g = -ev.gradient.cwiseProduct(unscale);
        // The outer-product sum shrinks like 1/n; rescaling by the retained
        // sample count brings it to the order of the sampled NMI Hessian,
        // which it still underestimates along the translations.
        const double retained = static_cast<double>(ev.sample_size - ev.escaped);
        Mat6 h = kCurvatureGain * retained * (unscale.asDiagonal() * ev.curvature * unscale.asDiagonal());
        h.diagonal().array() += cfg.damping;
        const Vec6 step = dogleg_step(h, g, radius);
        rec.step_norm = step.norm();
        rec.predicted = -(g.dot(step) + 0.5 * step.dot(h * step));
        const RigidParams trial = step_params(theta, step, rotation_scale);
        try {
          rec.trial_value = metric.value(trial, idx);
          const double actual = rec.trial_value - rec.value;
          if (rec.predicted > 0.0) rho = actual / rec.predicted;
          accepted = actual > 0.0;
          if (accepted) theta = trial;
        } catch (const DegenerateHistogramError&) {
          rec.trial_value = std::numeric_limits<double>::quiet_NaN();
        }
      }
    }
    rec.rho = rho;
    rec.accepted = accepted;

    if (rho < cfg.rho_low) {
      radius *= cfg.shrink;
    } else if (rho > cfg.rho_high && rec.step_norm >= 0.99 * rec.radius) {
      radius *= cfg.expand;
    }
    result.trace.push_back(rec);
    if (radius < cfg.min_radius) {
      result.termination = Termination::kRadius;
      break;
    }
  }
  result.theta = theta;
  return result;
}

LevelResult optimize_level(const Volume& fixed_level, const Volume& moving_level,
                           const SamplingDistribution& dist, const RigidParams& theta0,
                           const OptimizerConfig& cfg, std::uint64_t seed,
                           const MetricSettings& metric, int level) {
  return optimize_level(PartialVolumeMetric(fixed_level, moving_level, metric), dist, theta0, cfg,
                        seed, level);
}

double SamplerSpec::beta_at(int r) const {
  switch (kind) {
    case SamplerKind::kUrs: return 1.0;
    case SamplerKind::kGms: return 0.0;
    case SamplerKind::kMixed:
      if (r < 1 || static_cast<std::size_t>(r) > betas.size()) {
        throw ParameterError("mixed sampler has no beta for level " + std::to_string(r));
      }
      return betas[static_cast<std::size_t>(r - 1)];
  }
  return 1.0;
}

PreparedPair::PreparedPair(Volume fixed, Volume moving, int levels, Interpolation interpolation)
    : fixed_(build_pyramid(fixed, levels, interpolation)),
      moving_(build_pyramid(moving, levels, interpolation)),
      fixed_window_(fixed.range()),
      moving_window_(moving.range()) {
  gradients_.reserve(static_cast<std::size_t>(levels));
  for (int r = 1; r <= levels; ++r) gradients_.push_back(gradient_magnitude(fixed_.level(r)));
}

double PreparedPair::default_rotation_scale() const {
  return 0.5 * (fixed(1).far_corner() - fixed(1).origin()).norm();
}

std::shared_ptr<const SamplingDistribution> PreparedPair::gms(int r, double m) const {
  const std::lock_guard lock(cache_mutex_);
  auto& slot = gms_cache_[{r, m}];
  if (!slot) slot = std::make_shared<const SamplingDistribution>(build_gms(fixed_gradient(r), m, r));
  return slot;
}

SamplingDistribution PreparedPair::distribution(int r, SamplerKind kind, double m, double beta) const {
  const std::size_t n = fixed(r).size();
  switch (kind) {
    case SamplerKind::kUrs: return build_urs(n, m, r);
    case SamplerKind::kGms: return *gms(r, m);
    case SamplerKind::kMixed: return build_mixed(build_urs(n, m, r), *gms(r, m), beta);
  }
  throw ParameterError("unknown sampler kind");
}

RegistrationResult register_prepared(const PreparedPair& pair, const SamplerSpec& sampler,
                                     double rate, const RegistrationConfig& cfg,
                                     std::uint64_t seed, int finest_level) {
  if (!(rate > 0.0 && rate <= 1.0)) throw ParameterError("sampling rate must lie in (0, 1]");
  const int levels = pair.levels();
  if (finest_level < 1 || finest_level > levels) throw ParameterError("finest level out of range");
  const auto start = std::chrono::steady_clock::now();

  RegistrationResult result;
  result.sampler = sampler.kind;
  result.rate = rate;
  result.seed = seed;
  result.samples_per_level = rate * static_cast<double>(pair.fixed(1).size());
  for (int r = 1; r <= levels; ++r) result.betas.push_back(sampler.beta_at(r));

  OptimizerConfig opt = cfg.optimizer;
  if (!(opt.rotation_scale > 0.0)) opt.rotation_scale = pair.default_rotation_scale();
  result.rotation_scale = opt.rotation_scale;

  MetricSettings metric = cfg.metric;
  metric.fixed_window = pair.fixed_window();
  metric.moving_window = pair.moving_window();

  RigidParams theta = RigidParams::identity(pair.center());
  for (int r = levels; r >= finest_level; --r) {
    const SamplingDistribution dist =
        pair.distribution(r, sampler.kind, result.samples_per_level, sampler.beta_at(r));
    const PartialVolumeMetric engine(pair.fixed(r), pair.moving(r), metric);
    try {
      result.levels.push_back(
          optimize_level(engine, dist, theta, opt, derive_seed(seed, {static_cast<std::uint64_t>(r)}), r));
    } catch (const OverlapError& e) {
      throw OverlapError("level " + std::to_string(r) + ": " + e.what());
    }
    theta = result.levels.back().theta;
  }
  result.theta = theta;
  result.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

RegistrationResult register_volumes(const Volume& fixed, const Volume& moving,
                                    const SamplerSpec& sampler, double rate,
                                    const RegistrationConfig& cfg, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const PreparedPair pair(fixed, moving, cfg.levels, cfg.interpolation);
  RegistrationResult result = register_prepared(pair, sampler, rate, cfg, seed);
  result.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace mixreg
