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

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixreg/bench.hpp"
#include "mixreg/optimizer.hpp"
#include "mixreg/training.hpp"
#include "mixreg/transform.hpp"

// JSON schemas shared by the CLI, result files and training artifacts.

namespace mixreg {

void to_json(nlohmann::json& j, const RigidParams& p);
void from_json(const nlohmann::json& j, RigidParams& p);

void to_json(nlohmann::json& j, const OptimizerConfig& c);
void from_json(const nlohmann::json& j, OptimizerConfig& c);

/// {"bins": B, "radius": a}; intensity windows are runtime state and omitted.
void to_json(nlohmann::json& j, const MetricSettings& s);
void from_json(const nlohmann::json& j, MetricSettings& s);

void to_json(nlohmann::json& j, const RegistrationConfig& c);
void from_json(const nlohmann::json& j, RegistrationConfig& c);

void to_json(nlohmann::json& j, const PsoConfig& c);
void from_json(const nlohmann::json& j, PsoConfig& c);

void to_json(nlohmann::json& j, const LevelResult& r);
void to_json(nlohmann::json& j, const RegistrationResult& r);
void to_json(nlohmann::json& j, const PsoResult& r);
void to_json(nlohmann::json& j, const TrainingResult& r);

/// {"levels": [{"r": 4, "beta": ...}, ...]}, coarsest level first.
nlohmann::json betas_to_json(const std::vector<double>& betas);
/// Inverse of betas_to_json; the result is indexed by r - 1. Every level
/// 1..R must appear exactly once with beta in [0, 1].
std::vector<double> betas_from_json(const nlohmann::json& j);

struct ManifestEntry {
  std::filesystem::path fixed;
  std::filesystem::path moving;
  RigidParams gold;
};

/// Training / sweep manifest: a JSON list of {fixed, moving, gold}, or an
/// object holding that list under "pairs". Relative paths resolve against
/// `base_dir`.
std::vector<ManifestEntry> manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json manifest_to_json(const std::vector<ManifestEntry>& entries);

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Writes j.dump(2) plus a trailing newline.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace mixreg
