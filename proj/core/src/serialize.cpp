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

#include "mixreg/serialize.hpp"

#include <cerrno>
#include <fstream>
#include <set>
#include <system_error>

#include "mixreg/error.hpp"
#include "mixreg/random.hpp"

namespace mixreg {
namespace {

nlohmann::json vec3_json(const Vec3& v) { return nlohmann::json::array({v[0], v[1], v[2]}); }

Vec3 vec3_from(const nlohmann::json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) {
    throw ParameterError(std::string("transform key '") + key + "' must be an array of 3 numbers");
  }
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const RigidParams& p) {
  j = {{"t_mm", vec3_json(p.t)}, {"r_rad", vec3_json(p.r)}, {"center_mm", vec3_json(p.center)}};
}

void from_json(const nlohmann::json& j, RigidParams& p) {
  p.t = vec3_from(j, "t_mm");
  p.r = vec3_from(j, "r_rad");
  p.center = j.contains("center_mm") ? vec3_from(j, "center_mm") : Vec3::Zero();
  if (!p.t.allFinite() || !p.r.allFinite() || !p.center.allFinite()) {
    throw ParameterError("transform parameters must be finite");
  }
}

void to_json(nlohmann::json& j, const OptimizerConfig& c) {
  j = {{"max_iters", c.max_iters},  {"initial_radius", c.initial_radius}, {"min_radius", c.min_radius},
       {"expand", c.expand},        {"shrink", c.shrink},                 {"rho_low", c.rho_low},
       {"rho_high", c.rho_high},    {"damping", c.damping},               {"rotation_scale", c.rotation_scale}};
}

void from_json(const nlohmann::json& j, OptimizerConfig& c) {
  read_if(j, "max_iters", c.max_iters);
  read_if(j, "initial_radius", c.initial_radius);
  read_if(j, "min_radius", c.min_radius);
  read_if(j, "expand", c.expand);
  read_if(j, "shrink", c.shrink);
  read_if(j, "rho_low", c.rho_low);
  read_if(j, "rho_high", c.rho_high);
  read_if(j, "damping", c.damping);
  read_if(j, "rotation_scale", c.rotation_scale);
}

void to_json(nlohmann::json& j, const MetricSettings& s) { j = {{"bins", s.bins}, {"radius", s.radius}}; }

void from_json(const nlohmann::json& j, MetricSettings& s) {
  read_if(j, "bins", s.bins);
  read_if(j, "radius", s.radius);
}

void to_json(nlohmann::json& j, const RegistrationConfig& c) {
  j = {{"levels", c.levels},
       {"similarity", c.metric},
       {"optimizer", c.optimizer},
       {"interpolation", c.interpolation == Interpolation::kCatmullRom ? "catmull-rom" : "trilinear"}};
}

void from_json(const nlohmann::json& j, RegistrationConfig& c) {
  read_if(j, "levels", c.levels);
  if (j.contains("similarity")) from_json(j.at("similarity"), c.metric);
  if (j.contains("optimizer")) from_json(j.at("optimizer"), c.optimizer);
  if (j.contains("interpolation")) {
    const auto name = j.at("interpolation").get<std::string>();
    if (name == "catmull-rom") {
      c.interpolation = Interpolation::kCatmullRom;
    } else if (name == "trilinear") {
      c.interpolation = Interpolation::kTrilinear;
    } else {
      throw ParameterError("interpolation must be \"catmull-rom\" or \"trilinear\"");
    }
  }
}

void to_json(nlohmann::json& j, const PsoConfig& c) {
  j = {{"particles", c.particles}, {"iterations", c.iterations}, {"inertia", c.inertia},
       {"cognitive", c.cognitive}, {"social", c.social},         {"lower", c.lower},
       {"upper", c.upper},         {"velocity_clamp", c.velocity_clamp}};
}

void from_json(const nlohmann::json& j, PsoConfig& c) {
  read_if(j, "particles", c.particles);
  read_if(j, "iterations", c.iterations);
  read_if(j, "inertia", c.inertia);
  read_if(j, "cognitive", c.cognitive);
  read_if(j, "social", c.social);
  read_if(j, "lower", c.lower);
  read_if(j, "upper", c.upper);
  read_if(j, "velocity_clamp", c.velocity_clamp);
}

void to_json(nlohmann::json& j, const LevelResult& r) {
  nlohmann::json trace = {{"draw_seed", nlohmann::json::array()},   {"sample_size", nlohmann::json::array()},
                          {"escaped", nlohmann::json::array()},     {"radius", nlohmann::json::array()},
                          {"value", nlohmann::json::array()},       {"trial_value", nlohmann::json::array()},
                          {"predicted", nlohmann::json::array()},   {"rho", nlohmann::json::array()},
                          {"step_norm", nlohmann::json::array()},   {"accepted", nlohmann::json::array()}};
  for (const auto& it : r.trace) {
    trace["draw_seed"].push_back(it.draw_seed);
    trace["sample_size"].push_back(it.sample_size);
    trace["escaped"].push_back(it.escaped);
    trace["radius"].push_back(it.radius);
    trace["value"].push_back(it.value);
    trace["trial_value"].push_back(it.trial_value);
    trace["predicted"].push_back(it.predicted);
    trace["rho"].push_back(it.rho);
    trace["step_norm"].push_back(it.step_norm);
    trace["accepted"].push_back(it.accepted);
  }
  j = {{"r", r.r},
       {"theta", r.theta},
       {"iterations", r.iterations},
       {"termination", to_string(r.termination)},
       {"expected_samples", r.expected_samples},
       {"voxels", r.voxels},
       {"mean_escaped_fraction", r.mean_escaped_fraction()},
       {"trace", trace}};
}

void to_json(nlohmann::json& j, const RegistrationResult& r) {
  j = {{"theta", r.theta},
       {"levels", r.levels},
       {"sampler", to_string(r.sampler)},
       {"betas", r.betas},
       {"rate", r.rate},
       {"samples_per_level", r.samples_per_level},
       {"seed", r.seed},
       {"rng", std::string(CounterRng::kAlgorithm)},
       {"rotation_scale", r.rotation_scale},
       {"elapsed_s", r.elapsed_seconds}};
}

void to_json(nlohmann::json& j, const PsoResult& r) {
  j = {{"best_position", r.best_position},
       {"best_value", r.best_value},
       {"gbest_history", r.history},
       {"gbest_position_history", r.position_history},
       {"evaluations", r.evaluations}};
}

void to_json(nlohmann::json& j, const TrainingResult& r) {
  j = nlohmann::json::array();
  for (const auto& level : r.levels) {
    j.push_back({{"r", level.r}, {"beta", level.beta}, {"objective", level.objective}, {"pso", level.pso}});
  }
}

nlohmann::json betas_to_json(const std::vector<double>& betas) {
  nlohmann::json levels = nlohmann::json::array();
  for (int r = static_cast<int>(betas.size()); r >= 1; --r) {
    levels.push_back({{"r", r}, {"beta", betas[static_cast<std::size_t>(r - 1)]}});
  }
  return {{"levels", levels}};
}

std::vector<double> betas_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("levels") || !j.at("levels").is_array() || j.at("levels").empty()) {
    throw ParameterError("beta file must hold a non-empty \"levels\" array");
  }
  const auto& levels = j.at("levels");
  std::vector<double> betas(levels.size(), -1.0);
  std::set<int> seen;
  for (const auto& entry : levels) {
    const int r = entry.at("r").get<int>();
    const double beta = entry.at("beta").get<double>();
    if (r < 1 || static_cast<std::size_t>(r) > levels.size() || !seen.insert(r).second) {
      throw ParameterError("beta file levels must be 1..R, each exactly once");
    }
    if (!(beta >= 0.0 && beta <= 1.0)) throw ParameterError("beta values must lie in [0, 1]");
    betas[static_cast<std::size_t>(r - 1)] = beta;
  }
  return betas;
}

std::vector<ManifestEntry> manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  const nlohmann::json& list = j.is_object() && j.contains("pairs") ? j.at("pairs") : j;
  if (!list.is_array()) throw ParameterError("manifest must be a JSON list of pairs");
  std::vector<ManifestEntry> out;
  for (const auto& item : list) {
    ManifestEntry e;
    e.fixed = item.at("fixed").get<std::string>();
    e.moving = item.at("moving").get<std::string>();
    e.gold = item.at("gold").get<RigidParams>();
    if (e.fixed.is_relative()) e.fixed = base_dir / e.fixed;
    if (e.moving.is_relative()) e.moving = base_dir / e.moving;
    out.push_back(std::move(e));
  }
  return out;
}

nlohmann::json manifest_to_json(const std::vector<ManifestEntry>& entries) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : entries) {
    j.push_back({{"fixed", e.fixed.string()}, {"moving", e.moving.string()}, {"gold", e.gold}});
  }
  return j;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::system_error(errno, std::generic_category(), "write failed for " + path.string());
}

}  // namespace mixreg
