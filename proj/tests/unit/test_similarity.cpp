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
#include <numbers>

#include <Eigen/Eigenvalues>

#include "mixreg/bench.hpp"
#include "mixreg/error.hpp"
#include "mixreg/random.hpp"
#include "mixreg/similarity.hpp"

using namespace mixreg;

namespace {

JointHistogram table(int bins, const std::vector<double>& cells) {
  JointHistogram h;
  h.bins = bins;
  h.cells = cells;
  h.recompute_marginals();
  return h;
}

std::vector<std::uint32_t> all_indices(const Volume& v) {
  std::vector<std::uint32_t> idx(v.size());
  for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

// Pattern with period 4 along x, so +4 voxel shifts reproduce it exactly.
Volume periodic(int n) {
  std::vector<float> v;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) v.push_back(static_cast<float>(10 * (i % 4) + ((j / 3 + k / 5) % 3)));
  return Volume({n, n, n}, Vec3::Ones(), Vec3::Zero(), std::move(v));
}

// Mirror-symmetric about the centre on every axis, so first-order changes of
// the histogram cancel at the identity.
Volume symmetric_pattern(int n) {
  const double table[] = {5, 1, 8, 3, 9, 2, 7, 4, 6, 0, 5, 3, 8, 1, 9, 2};
  const double c = 0.5 * (n - 1);
  std::vector<float> v;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const auto g = [&](int x) { return table[static_cast<int>(std::abs(x - c)) % 16]; };
        v.push_back(static_cast<float>(g(i) + 10 * g(j) + 100 * g(k)));
      }
  return Volume({n, n, n}, Vec3::Ones(), Vec3::Zero(), std::move(v));
}

}  // namespace

TEST_CASE("hann_sinc") {
  CHECK(hann_sinc(0.0, 2).weight == 1.0);
  CHECK(hann_sinc(0.0, 2).derivative == 0.0);
  CHECK(std::abs(hann_sinc(1.0, 2).weight) < 1e-15);
  const double want = (2.0 / std::numbers::pi) * (0.5 + 0.5 * std::cos(std::numbers::pi / 4));
  CHECK(hann_sinc(0.5, 2).weight == doctest::Approx(want).epsilon(1e-12));
  CHECK(hann_sinc(0.5, 2).weight == doctest::Approx(0.54344).epsilon(1e-4));
  for (int a : {1, 2, 3}) {
    CHECK(hann_sinc(a, a).weight == 0.0);
    CHECK(hann_sinc(a + 0.3, a).derivative == 0.0);
    CHECK(std::abs(hann_sinc(a - 1e-9, a).weight) < 1e-8);
    CHECK(std::abs(hann_sinc(a - 1e-9, a).derivative) < 1e-6);
    for (double t : {-1.7, -0.4, 0.3, 0.9, 1.3}) {
      if (std::abs(t) >= a) continue;
      const double h = 1e-6;
      const double fd = (hann_sinc(t + h, a).weight - hann_sinc(t - h, a).weight) / (2 * h);
      CHECK(hann_sinc(t, a).derivative == doctest::Approx(fd).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(hann_sinc(0.1, 4), ParameterError);
}

TEST_CASE("nmi identities") {
  SUBCASE("diagonal table gives 2") {
    std::vector<double> c(16 * 16, 0.0);
    for (int i = 0; i < 16; ++i) c[static_cast<std::size_t>(i) * 16 + i] = 1.0 + i;
    CHECK(std::abs(nmi(table(16, c)) - 2.0) <= 1e-6);
  }
  SUBCASE("product table gives 1") {
    std::vector<double> pf(8), pm(8), c(64);
    for (int i = 0; i < 8; ++i) {
      pf[static_cast<std::size_t>(i)] = 1.0 + i;
      pm[static_cast<std::size_t>(i)] = 9.0 - i * 0.5;
    }
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) c[static_cast<std::size_t>(i * 8 + j)] = pf[static_cast<std::size_t>(i)] * pm[static_cast<std::size_t>(j)];
    CHECK(std::abs(nmi(table(8, c)) - 1.0) <= 1e-6);
  }
  SUBCASE("single cell returns 2") {
    std::vector<double> c(64, 0.0);
    c[9] = 5.0;
    CHECK(nmi(table(8, c)) == 2.0);
  }
  SUBCASE("invariant under simultaneous bin relabelling") {
    CounterRng rng(3);
    std::vector<double> c(64);
    for (double& x : c) x = rng.uniform();
    const int perm_f[8] = {3, 1, 7, 0, 2, 6, 5, 4};
    const int perm_m[8] = {6, 0, 1, 5, 7, 2, 4, 3};
    std::vector<double> p(64);
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) p[static_cast<std::size_t>(perm_f[i] * 8 + perm_m[j])] = c[static_cast<std::size_t>(i * 8 + j)];
    CHECK(nmi(table(8, p)) == doctest::Approx(nmi(table(8, c))).epsilon(1e-12));
    const double v = nmi(table(8, c));
    CHECK(v > 0.0);
    CHECK(v <= 2.0);
  }
}

TEST_CASE("accumulate") {
  const Volume fixed = make_phantom(32, 5);
  SUBCASE("identity on the same grid is diagonal") {
    const auto idx = all_indices(fixed);
    const JointHistogram h = accumulate(fixed, fixed, RigidParams::identity(fixed.center()), idx);
    double off = 0.0;
    for (int f = 0; f < h.bins; ++f)
      for (int m = 0; m < h.bins; ++m)
        if (std::abs(f - m) > 1) off += std::abs(h.at(f, m));
    CHECK(off < 1e-9 * h.total_weight);
    CHECK(h.escaped > 0);  // boundary voxels lack a full neighbourhood
  }
  SUBCASE("mass conservation and marginals") {
    CounterRng rng(8);
    const Volume moving = make_moving(fixed, random_rigid(rng, 5, 0.1, fixed.center()), {}, 1).volume;
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<std::uint32_t> idx;
      for (std::uint32_t i = 0; i < fixed.size(); ++i)
        if (rng.uniform() < 0.05) idx.push_back(i);
      const RigidParams theta = random_rigid(rng, 8, 0.15, fixed.center());
      const JointHistogram h = accumulate(fixed, moving, theta, idx);
      CHECK(std::abs(h.total_weight + static_cast<double>(h.escaped) - static_cast<double>(idx.size())) <= 1e-9);
      double cells = 0;
      for (double c : h.cells) cells += c;
      CHECK(std::abs(cells - h.total_weight) <= 1e-9 * std::max(1.0, h.total_weight));
      for (int f = 0; f < h.bins; ++f) {
        double row = 0;
        for (int m = 0; m < h.bins; ++m) row += h.at(f, m);
        CHECK(std::abs(row - h.marginal_fixed[static_cast<std::size_t>(f)]) <= 1e-9 * std::max(1.0, h.total_weight));
      }
    }
  }
  SUBCASE("integer shift of a periodic pattern reproduces the identity histogram") {
    const Volume p = periodic(24);
    std::vector<std::uint32_t> interior;
    for (int k = 4; k < 20; ++k)
      for (int j = 4; j < 20; ++j)
        for (int i = 3; i < 15; ++i) interior.push_back(static_cast<std::uint32_t>(p.index(i, j, k)));
    const JointHistogram a = accumulate(p, p, RigidParams{}, interior);
    const JointHistogram b = accumulate(p, p, RigidParams{Vec3(4, 0, 0), Vec3::Zero(), Vec3::Zero()}, interior);
    CHECK(a.escaped == 0);
    CHECK(b.escaped == 0);
    for (std::size_t c = 0; c < a.cells.size(); ++c) CHECK(std::abs(a.cells[c] - b.cells[c]) < 1e-9);
  }
  SUBCASE("empty or fully escaped index sets are degenerate") {
    CHECK_THROWS_AS(accumulate(fixed, fixed, RigidParams{}, std::vector<std::uint32_t>{}), DegenerateHistogramError);
    const RigidParams far{Vec3(500, 0, 0), Vec3::Zero(), Vec3::Zero()};
    CHECK_THROWS_AS(evaluate(fixed, fixed, far, all_indices(fixed)), DegenerateHistogramError);
  }
}

TEST_CASE("evaluate") {
  const Volume fixed = make_phantom(32, 9);
  SUBCASE("stationary at perfect alignment") {
    const Volume sym = symmetric_pattern(24);
    // A (2a)^3 neighbourhood reaches one voxel further up than down, so only
    // a box symmetric about the centre and clear of escapes keeps the
    // cancellation exact.
    std::vector<std::uint32_t> idx;
    for (int k = 2; k < 22; ++k)
      for (int j = 2; j < 22; ++j)
        for (int i = 2; i < 22; ++i) idx.push_back(static_cast<std::uint32_t>(sym.index(i, j, k)));
    const MetricEvaluation ev = evaluate(sym, sym, RigidParams::identity(sym.center()), idx);
    CHECK(ev.value == doctest::Approx(nmi(accumulate(sym, sym, RigidParams::identity(sym.center()), idx))));
    CHECK(ev.gradient.norm() <= 1e-3 * std::abs(ev.value));
  }
  SUBCASE("single-sample curvature has rank one") {
    const std::vector<std::uint32_t> one{static_cast<std::uint32_t>(fixed.index(16, 15, 14))};
    const RigidParams theta{Vec3(0.3, -0.2, 0.1), Vec3(0.01, 0.02, -0.01), fixed.center()};
    const MetricEvaluation ev = evaluate(fixed, fixed, theta, one);
    Eigen::SelfAdjointEigenSolver<Mat6> es(ev.curvature);
    int nonzero = 0;
    for (int i = 0; i < 6; ++i) nonzero += es.eigenvalues()[i] > 1e-9 * es.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(nonzero <= 1);
  }
  SUBCASE("curvature is symmetric PSD and gradient matches finite differences") {
    CounterRng rng(21);
    const Volume moving = make_moving(fixed, random_rigid(rng, 4, 0.08, fixed.center()), {}, 2).volume;
    const double rotation_scale = 0.5 * (fixed.far_corner() - fixed.origin()).norm();
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<std::uint32_t> sub;
      for (std::uint32_t i = 0; i < fixed.size(); ++i)
        if (rng.uniform() < 0.1) sub.push_back(i);
      const RigidParams theta = random_rigid(rng, 4, 0.08, fixed.center());
      const MetricEvaluation ev = evaluate(fixed, moving, theta, sub);
      CHECK((ev.curvature - ev.curvature.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(Eigen::SelfAdjointEigenSolver<Mat6>(ev.curvature).eigenvalues().minCoeff() >= -1e-9);
      // The sampled metric is only piecewise smooth (escapes, near-empty
      // cells), so the step stays well inside one piece.
      for (int k = 0; k < 6; ++k) {
        const double h = k < 3 ? 1e-5 : 1e-5 / rotation_scale;
        Vec6 plus = theta.as_vector(), minus = theta.as_vector();
        plus[k] += h;
        minus[k] -= h;
        const double fd = (nmi(accumulate(fixed, moving, RigidParams::from_vector(plus, theta.center), sub)) -
                           nmi(accumulate(fixed, moving, RigidParams::from_vector(minus, theta.center), sub))) /
                          (2 * h);
        const double g = ev.gradient[k];
        if (std::abs(g) > 1e-8) {
          CHECK(std::abs(fd - g) <= 1e-4 * std::abs(g));
        } else {
          CHECK(std::abs(fd - g) <= 1e-6);
        }
      }
    }
  }
}
