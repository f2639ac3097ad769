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

#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

#include "mixreg/bench.hpp"
#include "mixreg/error.hpp"

using namespace mixreg;

namespace {

RigidParams shift(double dx, const Vec3& c = Vec3::Zero()) { return {Vec3(dx, 0, 0), Vec3::Zero(), c}; }

CaseOutcome outcome(std::vector<double> tre, bool failed) {
  CaseOutcome o;
  o.tre_per_point = std::move(tre);
  o.failed = failed;
  return o;
}

std::size_t line_count(const std::string& s) {
  std::size_t n = 0;
  std::istringstream in(s);
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') ++n;
  return n;
}

}  // namespace

TEST_CASE("make_phantom") {
  const Volume a = make_phantom(32, 7), b = make_phantom(32, 7);
  CHECK(std::memcmp(a.voxels().data(), b.voxels().data(), a.size() * sizeof(float)) == 0);
  CHECK(a.spacing() == Vec3::Ones());
  CHECK(a.range().span() > 0.0);
  const Volume g = gradient_magnitude(a);
  CHECK(g.range().max > 0.0);
  std::set<int> bins;
  for (float x : a.voxels()) bins.insert(std::min(63, static_cast<int>(64 * (x - a.range().min) / a.range().span())));
  CHECK(bins.size() >= 8);
  CHECK_THROWS_AS(make_phantom(31, 1), ParameterError);
  const Volume c = make_phantom(32, 8);
  CHECK(std::memcmp(a.voxels().data(), c.voxels().data(), a.size() * sizeof(float)) != 0);
}

TEST_CASE("make_moving") {
  const Volume v = make_phantom(40, 2);
  SUBCASE("identity without remap or noise reproduces the input") {
    const auto m = make_moving(v, RigidParams::identity(v.center()), {1.0, 0.0}, 1);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(m.volume.voxels()[i] - v.voxels()[i]) <= 1e-3);
  }
  SUBCASE("pullback identity") {
    const RigidParams gold = shift(5, v.center());
    const auto m = make_moving(v, gold, {1.0, 0.0}, 1);
    CHECK(m.gold == gold);
    CounterRng rng(4);
    for (int i = 0; i < 100; ++i) {
      const Vec3 p(rng.uniform(8, 26), rng.uniform(5, 34), rng.uniform(5, 34));
      const auto moved = sample_trilinear(m.volume, apply(gold, p));
      const auto orig = sample_trilinear(v, p);
      REQUIRE(moved.has_value());
      // Double trilinear interpolation of an integer shift reproduces the knots.
      CHECK(std::abs(*moved - *orig) <= 1e-3 * v.range().span());
    }
  }
  SUBCASE("noise calibration") {
    const auto clean = make_moving(v, RigidParams::identity(v.center()), {1.0, 0.0}, 1);
    const auto noisy = make_moving(v, RigidParams::identity(v.center()), {1.0, 0.02}, 1);
    double s = 0, s2 = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = noisy.volume.voxels()[i] - clean.volume.voxels()[i];
      s += d;
      s2 += d * d;
    }
    const double n = static_cast<double>(v.size());
    const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
    CHECK(std::abs(sd - 0.02 * v.range().span()) <= 0.2 * 0.02 * v.range().span());
  }
  SUBCASE("oversized transforms are rejected") {
    CHECK_THROWS_AS(make_moving(v, shift(25), {}, 1), ParameterError);
    CHECK_THROWS_AS(make_moving(v, RigidParams{Vec3::Zero(), Vec3(0.4, 0, 0), v.center()}, {}, 1), ParameterError);
  }
}

TEST_CASE("evaluate_case and the failure rule") {
  const std::vector<Vec3> probes{Vec3(0, 0, 0), Vec3(10, 10, 10)};
  const RigidParams gold{Vec3(1, 2, 3), Vec3(0.05, 0, 0), Vec3(5, 5, 5)};
  const CaseOutcome exact = evaluate_case(gold, gold, probes);
  CHECK(exact.max_tre() == 0.0);
  CHECK_FALSE(exact.failed);
  CHECK(evaluate_case(shift(11), RigidParams{}, probes).failed);
  CHECK_FALSE(evaluate_case(shift(9), RigidParams{}, probes).failed);
  CHECK(evaluate_case(shift(9), RigidParams{}, probes, 5.0).failed);
  CHECK(evaluate_case(shift(9), RigidParams{}, probes).mean_tre() == doctest::Approx(9.0));
}

TEST_CASE("trimmed_mtre") {
  const std::vector<CaseOutcome> ok{outcome({1, 1}, false), outcome({2, 2}, false)};
  CHECK(*trimmed_mtre(ok) == doctest::Approx(1.5));
  const std::vector<CaseOutcome> mixed{outcome({2}, false), outcome({50}, true)};
  CHECK(*trimmed_mtre(mixed) == doctest::Approx(2.0));
  const std::vector<CaseOutcome> bad{outcome({50}, true)};
  CHECK_FALSE(trimmed_mtre(bad).has_value());
}

TEST_CASE("default rates") {
  const std::vector<double> want{0.0002, 0.0004, 0.00065, 0.001, 0.005, 0.01};
  CHECK(default_rates() == want);
}

TEST_CASE("sweep rows and aggregate") {
  const Volume v = make_phantom(32, 1);
  TrainingPair pair;
  pair.id = "0:self";
  pair.pair = std::make_shared<PreparedPair>(v, v, 2);
  pair.gold = RigidParams::identity(v.center());
  pair.probes = probe_points(v);
  SweepConfig cfg;
  cfg.rates = {0.05, 0.02};
  cfg.trials = 2;
  cfg.registration.levels = 2;
  cfg.registration.optimizer.max_iters = 5;
  const std::vector<SweepSampler> samplers{{"urs", {SamplerKind::kUrs, {}}},
                                           {"mixed", SamplerSpec::mixed_uniform(0.2, 2)}};
  const SweepReport report = sweep({pair}, samplers, cfg);
  CHECK(report.rows.size() == 1 * 2 * 2 * 2);
  CHECK(report.aggregate.size() == 4);
  for (const auto& a : report.aggregate) {
    int failures = 0, total = 0;
    for (const auto& r : report.rows)
      if (r.sampler == a.sampler && r.rate == a.rate) {
        ++total;
        failures += r.success ? 0 : 1;
      }
    CHECK(a.failure_rate == static_cast<double>(failures) / total);
  }
  std::ostringstream rows, agg;
  write_sweep_csv(rows, report, {"note"});
  write_aggregate_csv(agg, report);
  CHECK(rows.str().rfind("# note\n", 0) == 0);
  CHECK(rows.str().find("pair_id,sampler,beta_level1,beta_level2,rate,trial_seed,success,mtre_mm,max_tre_mm,time_ms") !=
        std::string::npos);
  CHECK(line_count(rows.str()) == 1 + report.rows.size());
  CHECK(agg.str().rfind("sampler,rate,failure_rate,trimmed_mtre_mm,median_time_ms", 0) == 0);
  CHECK(line_count(agg.str()) == 1 + report.aggregate.size());

  cfg.threads = 3;
  const SweepReport threaded = sweep({pair}, samplers, cfg);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    CHECK(threaded.rows[i].trial_seed == report.rows[i].trial_seed);
    CHECK(threaded.rows[i].max_tre_mm == report.rows[i].max_tre_mm);
  }
}

TEST_CASE("masks") {
  const Volume v = make_phantom(96, 1);
  const Volume g = gradient_magnitude(v);
  const double m = 0.005 * static_cast<double>(v.size());
  const auto urs = build_urs(v.size(), m);
  const auto gms = build_gms(g, m);

  const Volume mu = sampling_mask(v, urs, 3);
  double count = 0;
  for (float x : mu.voxels()) count += x;
  const double sigma = std::sqrt(m * (1 - 0.005));
  CHECK(std::abs(count - m) <= 3 * sigma);

  double g_all = 0, g_sel = 0, n_sel = 0;
  const Volume mg = sampling_mask(v, gms, 3);
  for (std::size_t i = 0; i < v.size(); ++i) {
    g_all += g.voxels()[i];
    if (mg.voxels()[i] > 0) {
      g_sel += g.voxels()[i];
      ++n_sel;
    }
  }
  CHECK(g_sel / n_sel > g_all / static_cast<double>(v.size()));

  const Volume mm = sampling_mask(v, build_mixed(urs, gms, 1.0), 3);
  CHECK(std::memcmp(mm.voxels().data(), mu.voxels().data(), v.size() * sizeof(float)) == 0);
}
