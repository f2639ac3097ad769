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

#include "mixreg/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "mixreg/error.hpp"
#include "mixreg/random.hpp"

namespace mixreg {

std::vector<Vec3> probe_points(const Volume& v) {
  const Vec3 lo = v.origin();
  const Vec3 hi = v.far_corner();
  std::vector<Vec3> pts;
  pts.reserve(9);
  for (int corner = 0; corner < 8; ++corner) {
    pts.emplace_back(corner & 1 ? hi[0] : lo[0], corner & 2 ? hi[1] : lo[1], corner & 4 ? hi[2] : lo[2]);
  }
  pts.push_back(v.center());
  return pts;
}

double etre_term(const RigidParams& gold, const RigidParams& est, std::span<const Vec3> probes) {
  if (probes.empty()) throw ParameterError("etre_term needs at least one probe point");
  double sum = 0.0;
  for (const Vec3& p : probes) sum += (apply(gold, p) - apply(est, p)).squaredNorm();
  return sum / static_cast<double>(probes.size());
}

LevelRegistrar cascade_registrar(double rate, RegistrationConfig cfg) {
  return [rate, cfg = std::move(cfg)](const TrainingPair& pair, int level,
                                      const std::vector<double>& betas, std::uint64_t seed) {
    const SamplerSpec spec{SamplerKind::kMixed, betas};
    return register_prepared(*pair.pair, spec, rate, cfg, seed, level).theta;
  };
}

ObjectiveValue objective_q(int r, double beta, const std::vector<TrainingPair>& pairs, int trials,
                           const std::map<int, double>& frozen, const LevelRegistrar& registrar,
                           std::uint64_t seed) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ParameterError("candidate beta must lie in [0, 1]");
  if (trials < 1) throw ParameterError("Monte-Carlo trial count must be >= 1");
  if (pairs.empty()) throw ParameterError("objective needs at least one training pair");

  ObjectiveValue out;
  out.terms.reserve(pairs.size() * static_cast<std::size_t>(trials));
  for (std::size_t v = 0; v < pairs.size(); ++v) {
    const TrainingPair& pair = pairs[v];
    // Pairs without prepared volumes (registrar stubs) take their depth from
    // the frozen levels.
    const int levels = pair.pair ? pair.pair->levels() : (frozen.empty() ? r : frozen.rbegin()->first);
    std::vector<double> betas(static_cast<std::size_t>(std::max(levels, r)), beta);
    for (int coarser = r + 1; coarser <= levels; ++coarser) {
      const auto it = frozen.find(coarser);
      if (it == frozen.end()) {
        throw ParameterError("no frozen beta for level " + std::to_string(coarser));
      }
      betas[static_cast<std::size_t>(coarser - 1)] = it->second;
    }
    for (int u = 0; u < trials; ++u) {
      const std::uint64_t trial_seed = derive_seed(seed, {v, static_cast<std::uint64_t>(u)});
      RigidParams estimate;
      try {
        estimate = registrar(pair, r, betas, trial_seed);
      } catch (const std::exception& e) {
        throw std::runtime_error("training pair '" + pair.id + "': " + e.what());
      }
      out.terms.push_back(etre_term(pair.gold, estimate, pair.probes));
    }
  }
  double sum = 0.0;
  for (double t : out.terms) sum += t;
  out.value = sum / static_cast<double>(out.terms.size());
  return out;
}

void PsoConfig::validate() const {
  if (particles < 2) throw ParameterError("PSO needs at least 2 particles");
  if (iterations < 1) throw ParameterError("PSO needs at least 1 iteration");
  if (!(lower < upper)) throw ParameterError("PSO bounds need lower < upper");
  if (!(velocity_clamp > 0.0)) throw ParameterError("PSO velocity clamp must be > 0");
}

PsoResult pso_minimize(const std::function<double(double)>& f, const PsoConfig& cfg) {
  cfg.validate();
  CounterRng rng(cfg.seed);
  const auto n = static_cast<std::size_t>(cfg.particles);
  std::vector<double> x(n), v(n, 0.0), values(n);
  for (double& xi : x) xi = rng.uniform(cfg.lower, cfg.upper);

  auto evaluate_swarm = [&] {
    const int workers = std::clamp(cfg.threads, 1, cfg.particles);
    if (workers == 1) {
      for (std::size_t i = 0; i < n; ++i) values[i] = f(x[i]);
      return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            values[i] = f(x[i]);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  };

  PsoResult result;
  std::vector<double> best_x(n), best_value(n);
  std::size_t global = 0;
  for (int it = 0; it < cfg.iterations; ++it) {
    if (it > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        v[i] = cfg.inertia * v[i] + cfg.cognitive * r1 * (best_x[i] - x[i]) +
               cfg.social * r2 * (best_x[global] - x[i]);
        v[i] = std::clamp(v[i], -cfg.velocity_clamp, cfg.velocity_clamp);
        x[i] = std::clamp(x[i] + v[i], cfg.lower, cfg.upper);
      }
    }
    evaluate_swarm();
    result.evaluations += n;
    for (std::size_t i = 0; i < n; ++i) {
      if (it == 0 || values[i] < best_value[i]) {
        best_value[i] = values[i];
        best_x[i] = x[i];
      }
      if (best_value[i] < best_value[global]) global = i;
    }
    result.history.push_back(best_value[global]);
    result.position_history.push_back(best_x[global]);
  }
  result.best_position = best_x[global];
  result.best_value = best_value[global];
  return result;
}

std::vector<double> TrainingResult::betas() const {
  std::vector<double> out(levels.size());
  for (const auto& level : levels) out.at(static_cast<std::size_t>(level.r - 1)) = level.beta;
  return out;
}

TrainingResult train_cascade(const std::vector<TrainingPair>& pairs, int trials, const PsoConfig& pso,
                             const LevelRegistrar& registrar, int levels, std::uint64_t seed) {
  if (pairs.empty()) throw ParameterError("training needs at least one pair");
  if (levels < 1) throw ParameterError("training needs at least one level");
  TrainingResult result;
  std::map<int, double> frozen;
  for (int r = levels; r >= 1; --r) {
    const std::uint64_t level_seed = derive_seed(seed, {static_cast<std::uint64_t>(r)});
    PsoConfig level_pso = pso;
    level_pso.seed = derive_seed(pso.seed, {static_cast<std::uint64_t>(r)});
    const auto objective = [&](double beta) {
      return objective_q(r, beta, pairs, trials, frozen, registrar, level_seed).value;
    };
    LevelTraining level;
    level.r = r;
    level.pso = pso_minimize(objective, level_pso);
    level.beta = level.pso.best_position;
    level.objective = level.pso.best_value;
    frozen[r] = level.beta;
    result.levels.push_back(std::move(level));
  }
  return result;
}

TrainingResult train_cascade(const std::vector<TrainingPair>& pairs, int trials, const PsoConfig& pso,
                             const RegistrationConfig& cfg, double rate, std::uint64_t seed) {
  if (pairs.empty()) throw ParameterError("training needs at least one pair");
  return train_cascade(pairs, trials, pso, cascade_registrar(rate, cfg), pairs.front().pair->levels(), seed);
}

}  // namespace mixreg
