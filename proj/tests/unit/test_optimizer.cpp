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

#include <doctest.h>

#include "mixreg/bench.hpp"
#include "mixreg/error.hpp"
#include "mixreg/optimizer.hpp"
#include "mixreg/training.hpp"

using namespace mixreg;

namespace {

double max_corner_displacement(const RigidParams& a, const RigidParams& b, const Volume& v) {
  double worst = 0.0;
  for (const Vec3& p : probe_points(v)) worst = std::max(worst, (apply(a, p) - apply(b, p)).norm());
  return worst;
}

Volume shifted_copy(const Volume& v, double dx) {
  return make_moving(v, RigidParams{Vec3(dx, 0, 0), Vec3::Zero(), v.center()}, {1.0, 0.0}, 0).volume;
}

}  // namespace

TEST_CASE("config validation") {
  OptimizerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.min_radius = 2.0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = {};
  cfg.shrink = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
}

TEST_CASE("optimize_level") {
  const Volume fixed = make_phantom(32, 3);
  const RigidParams id = RigidParams::identity(fixed.center());

  SUBCASE("stays at the optimum for identical volumes") {
    const auto dist = build_urs(fixed.size(), 0.2 * static_cast<double>(fixed.size()));
    const LevelResult res = optimize_level(fixed, fixed, dist, id, {}, 17);
    CHECK(max_corner_displacement(res.theta, id, fixed) <= 0.1);
    for (const auto& rec : res.trace) {
      if (rec.accepted) CHECK(rec.trial_value > rec.value);
    }
  }
  SUBCASE("recovers a 4mm shift at a 4mm level with full sampling") {
    const Volume big = make_phantom(64, 4);
    const Pyramid pf = build_pyramid(big, 4);
    const Pyramid pm = build_pyramid(shifted_copy(big, 4.0), 4);
    const auto dist = build_urs(pf.level(4).size(), static_cast<double>(pf.level(4).size()));
    const LevelResult res =
        optimize_level(pf.level(4), pm.level(4), dist, RigidParams::identity(big.center()), {}, 5);
    CHECK(std::abs(res.theta.t[0] - 4.0) <= 0.5);
  }
  SUBCASE("zero budget returns the start unchanged") {
    OptimizerConfig cfg;
    cfg.max_iters = 0;
    const RigidParams start{Vec3(1, 2, 3), Vec3(0.01, 0, 0), fixed.center()};
    const LevelResult res = optimize_level(fixed, fixed, build_urs(fixed.size(), 100), start, cfg, 1);
    CHECK(res.theta == start);
    CHECK(res.trace.empty());
  }
  SUBCASE("start outside the overlap is an error") {
    const RigidParams far{Vec3(400, 0, 0), Vec3::Zero(), fixed.center()};
    CHECK_THROWS_AS(optimize_level(fixed, fixed, build_urs(fixed.size(), 500), far, {}, 1), OverlapError);
  }
  SUBCASE("radius floor and termination flag") {
    const LevelResult res = optimize_level(fixed, fixed, build_urs(fixed.size(), 2000), id, {}, 2);
    OptimizerConfig cfg;
    for (std::size_t i = 0; i + 1 < res.trace.size(); ++i) CHECK(res.trace[i].radius >= cfg.min_radius);
    if (res.termination == Termination::kBudget) {
      CHECK(res.iterations == cfg.max_iters);
    } else {
      CHECK(res.iterations <= cfg.max_iters);
    }
  }
}

TEST_CASE("register_volumes") {
  const Volume fixed = make_phantom(48, 6);
  RegistrationConfig cfg;

  SUBCASE("self-registration stays at identity and is deterministic") {
    const auto a = register_volumes(fixed, fixed, {SamplerKind::kUrs, {}}, 0.05, cfg, 9);
    const auto b = register_volumes(fixed, fixed, {SamplerKind::kUrs, {}}, 0.05, cfg, 9);
    CHECK(max_corner_displacement(a.theta, RigidParams::identity(fixed.center()), fixed) <= 0.5);
    CHECK(a.theta == b.theta);
    REQUIRE(a.levels.size() == 4);
    CHECK(a.levels.front().r == 4);
    CHECK(a.levels.back().r == 1);
    CHECK(a.levels.back().theta == a.theta);
    for (std::size_t l = 0; l < a.levels.size(); ++l) {
      REQUIRE(a.levels[l].trace.size() == b.levels[l].trace.size());
      for (std::size_t i = 0; i < a.levels[l].trace.size(); ++i) {
        CHECK(a.levels[l].trace[i].value == b.levels[l].trace[i].value);
        CHECK(a.levels[l].trace[i].draw_seed == b.levels[l].trace[i].draw_seed);
      }
    }
  }
  SUBCASE("samples per level come from the finest grid") {
    const PreparedPair pair(fixed, fixed, 4);
    const auto res = register_prepared(pair, {SamplerKind::kUrs, {}}, 0.3, cfg, 1);
    CHECK(res.samples_per_level == doctest::Approx(0.3 * static_cast<double>(fixed.size())));
    // M exceeds N_4, so level 4 is sampled exhaustively.
    const auto d = pair.distribution(4, SamplerKind::kUrs, res.samples_per_level, 1.0);
    for (double p : d.probs()) CHECK(p == 1.0);
    CHECK(res.levels.front().trace.front().sample_size == pair.fixed(4).size());
  }
  SUBCASE("mixed sampler needs a beta per level") {
    CHECK_THROWS_AS(register_volumes(fixed, fixed, {SamplerKind::kMixed, {0.2, 0.2}}, 0.01, cfg, 1), ParameterError);
    CHECK_THROWS_AS(register_volumes(fixed, fixed, {SamplerKind::kUrs, {}}, 0.0, cfg, 1), ParameterError);
  }
}
