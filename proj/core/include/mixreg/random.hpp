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

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace mixreg {

/// Counter-based generator (Philox4x32 with 10 rounds, Salmon et al. 2011).
///
/// The key is the 64-bit seed; the 128-bit counter advances once per block of
/// four 32-bit outputs. Given the same seed the output stream is identical on
/// every platform, which is what makes registration runs replayable.
class CounterRng {
 public:
  static constexpr std::string_view kAlgorithm = "philox4x32-10";

  explicit CounterRng(std::uint64_t seed) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1].
  double uniform_open_closed() noexcept { return 1.0 - uniform(); }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via the polar Box-Muller method.
  double normal() noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> block_{};
  int cursor_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// Mixes a base seed with a list of tags into an independent child seed
/// (splitmix64 finalizer chained over the tags).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) noexcept;

}  // namespace mixreg
