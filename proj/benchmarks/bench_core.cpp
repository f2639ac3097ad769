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


#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "mixreg/bench.hpp"
#include "mixreg/optimizer.hpp"
#include "mixreg/random.hpp"
#include "mixreg/sampler.hpp"
#include "mixreg/similarity.hpp"
#include "mixreg/volume.hpp"

namespace {

using namespace mixreg;

const Volume& phantom(int size) {
  static const Volume v64 = make_phantom(64, 1);
  static const Volume v96 = make_phantom(96, 1);
  return size == 64 ? v64 : v96;
}

const MovingImage& moving64() {
  static const MovingImage m = [] {
    const Volume& f = phantom(64);
    RigidParams gold = RigidParams::identity(f.center());
    gold.t = Vec3(3.0, -2.0, 1.5);
    gold.r = Vec3(0.03, -0.02, 0.05);
    return make_moving(f, gold, {0.7, 0.01}, 7);
  }();
  return m;
}

// Args: sample count.
void BM_MetricEvaluate(benchmark::State& state) {
  const Volume& f = phantom(64);
  const Volume& m = moving64().volume;
  const PartialVolumeMetric metric(f, m);
  const auto dist = build_urs(f.size(), static_cast<double>(state.range(0)));
  CounterRng rng(3);
  const std::vector<std::uint32_t> idx = draw(dist, rng);
  const RigidParams theta = RigidParams::identity(f.center());
  for (auto _ : state) benchmark::DoNotOptimize(metric.evaluate(theta, idx));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(idx.size()));
}
BENCHMARK(BM_MetricEvaluate)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMicrosecond);

void BM_MetricValue(benchmark::State& state) {
  const Volume& f = phantom(64);
  const PartialVolumeMetric metric(f, moving64().volume);
  const auto dist = build_urs(f.size(), static_cast<double>(state.range(0)));
  CounterRng rng(3);
  const std::vector<std::uint32_t> idx = draw(dist, rng);
  const RigidParams theta = RigidParams::identity(f.center());
  for (auto _ : state) benchmark::DoNotOptimize(metric.value(theta, idx));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(idx.size()));
}
BENCHMARK(BM_MetricValue)->Arg(10000)->Unit(benchmark::kMicrosecond);

// Args: expected sample count. Draw cost should follow M, not N.
void BM_DrawGms(benchmark::State& state) {
  const Volume grad = gradient_magnitude(phantom(96));
  const auto dist = build_gms(grad, static_cast<double>(state.range(0)));
  CounterRng rng(5);
  for (auto _ : state) benchmark::DoNotOptimize(draw(dist, rng));
}
BENCHMARK(BM_DrawGms)->Arg(100)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_DrawUrs(benchmark::State& state) {
  const auto dist = build_urs(phantom(96).size(), static_cast<double>(state.range(0)));
  CounterRng rng(5);
  for (auto _ : state) benchmark::DoNotOptimize(draw(dist, rng));
}
BENCHMARK(BM_DrawUrs)->Arg(100)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_BuildGms(benchmark::State& state) {
  const Volume grad = gradient_magnitude(phantom(96));
  for (auto _ : state) benchmark::DoNotOptimize(build_gms(grad, 1000.0));
}
BENCHMARK(BM_BuildGms)->Unit(benchmark::kMillisecond);

void BM_Pyramid(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(build_pyramid(phantom(96), 4));
}
BENCHMARK(BM_Pyramid)->Unit(benchmark::kMillisecond);

// Args: sampling rate in units of 0.01%.
void BM_Register(benchmark::State& state) {
  const PreparedPair pair(phantom(64), moving64().volume, 4);
  const double rate = static_cast<double>(state.range(0)) * 1e-4;
  const SamplerSpec spec = SamplerSpec::mixed_uniform(0.2, 4);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(register_prepared(pair, spec, rate, {}, ++seed));
}
BENCHMARK(BM_Register)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
