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
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mixreg/optimizer.hpp"
#include "mixreg/transform.hpp"

namespace mixreg {

/// A training image pair with its gold-standard transform. Probe points
/// default to the eight corners and the centre of the fixed volume.
struct TrainingPair {
  std::string id;
  std::shared_ptr<const PreparedPair> pair;
  RigidParams gold;
  std::vector<Vec3> probes;
};

/// Eight voxel-centre corners of the volume followed by its centre.
std::vector<Vec3> probe_points(const Volume& v);

/// Mean over probes of |gold(p) - est(p)|^2, in mm^2.
double etre_term(const RigidParams& gold, const RigidParams& est, std::span<const Vec3> probes);

/// Runs registration for one training pair from the coarsest level down to
/// `level`, with betas[r - 1] driving level r, and returns the level estimate.
using LevelRegistrar = std::function<RigidParams(const TrainingPair& pair, int level,
                                                 const std::vector<double>& betas,
                                                 std::uint64_t seed)>;

/// Registrar backed by register_prepared with the mixed sampler.
LevelRegistrar cascade_registrar(double rate, RegistrationConfig cfg);

struct ObjectiveValue {
  double value = 0.0;
  std::vector<double> terms;  // pair-major, V * U entries
};

/// Empirical target registration error at level r for candidate beta:
/// the mean of etre_term over every pair and Monte-Carlo trial. `frozen`
/// must hold the learned betas of all coarser levels r + 1 .. R. Trial (v, u)
/// uses seed derive_seed(seed, {v, u}).
ObjectiveValue objective_q(int r, double beta, const std::vector<TrainingPair>& pairs, int trials,
                           const std::map<int, double>& frozen, const LevelRegistrar& registrar,
                           std::uint64_t seed);

struct PsoConfig {
  int particles = 10;
  int iterations = 20;
  double inertia = 0.7;
  double cognitive = 1.5;
  double social = 1.5;
  double lower = 0.0;
  double upper = 1.0;
  double velocity_clamp = 0.5;
  std::uint64_t seed = 0;
  /// Concurrent objective evaluations per swarm iteration.
  int threads = 1;

  void validate() const;
};

struct PsoResult {
  double best_position = 0.0;
  double best_value = 0.0;
  std::vector<double> history;            // global best value after each iteration
  std::vector<double> position_history;   // global best position after each iteration
  std::size_t evaluations = 0;
};

/// Global-best particle swarm minimization of a scalar function on
/// [lower, upper]. The first iteration scores the random initial swarm, so the
/// objective is called exactly particles * iterations times, never outside the
/// bounds. `f` must be safe to call concurrently when threads > 1.
PsoResult pso_minimize(const std::function<double(double)>& f, const PsoConfig& cfg);

struct LevelTraining {
  int r = 1;
  double beta = 0.0;
  double objective = 0.0;
  PsoResult pso;
};

struct TrainingResult {
  std::vector<LevelTraining> levels;  // coarsest first
  /// betas[r - 1] is the learned weight for level r.
  std::vector<double> betas() const;
};

/// Learns beta level by level from the coarsest: each level's swarm scores
/// candidates with objective_q while all coarser levels use their learned
/// values. Every candidate at a level is scored with the same seed.
TrainingResult train_cascade(const std::vector<TrainingPair>& pairs, int trials, const PsoConfig& pso,
                             const LevelRegistrar& registrar, int levels, std::uint64_t seed);

TrainingResult train_cascade(const std::vector<TrainingPair>& pairs, int trials, const PsoConfig& pso,
                             const RegistrationConfig& cfg, double rate, std::uint64_t seed);

}  // namespace mixreg
