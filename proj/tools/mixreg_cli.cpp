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

// mixreg command-line tool: phantom generation, registration, beta training,
// sampling-rate sweeps and sampling-mask export.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mixreg/bench.hpp"
#include "mixreg/error.hpp"
#include "mixreg/optimizer.hpp"
#include "mixreg/random.hpp"
#include "mixreg/sampler.hpp"
#include "mixreg/serialize.hpp"
#include "mixreg/training.hpp"
#include "mixreg/volume.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

/// Bad flag values or flag combinations; reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One subcommand's settings. Values resolve as built-in defaults, then the
// --config file, then flags given on the command line. The resolved object is
// the run configuration embedded in every output.
class Settings {
 public:
  Settings(CLI::App* app, std::string command) : app_(app), command_(std::move(command)) {
    defaults_ = json::object();
    app_->add_option("--config", config_path_, "JSON run configuration (flags override it)");
  }

  template <typename T>
  CLI::Option* add(const std::string& flag, const std::string& pointer, T fallback, const std::string& help) {
    defaults_[json::json_pointer(pointer)] = fallback;
    return bind<T>(flag, pointer, help);
  }

  /// Option without a default; resolves to null when absent.
  template <typename T>
  CLI::Option* add_optional(const std::string& flag, const std::string& pointer, const std::string& help) {
    defaults_[json::json_pointer(pointer)] = nullptr;
    return bind<T>(flag, pointer, help);
  }

  void add_registration_flags() {
    defaults_["registration"] = mixreg::RegistrationConfig{};
    add<int>("--levels", "/registration/levels", 4, "pyramid levels");
    add<int>("--bins", "/registration/similarity/bins", 64, "histogram bins per axis");
    add<int>("--kernel-radius", "/registration/similarity/radius", 2, "partial-volume kernel radius");
    add<int>("--max-iters", "/registration/optimizer/max_iters", 50, "optimizer iterations per level");
  }

  json resolve() const {
    json out = defaults_;
    if (!config_path_.empty()) {
      json file = mixreg::read_json_file(config_path_);
      if (file.is_object() && file.contains("run_config")) file = file.at("run_config");
      if (!file.is_object()) throw UsageError("--config: expected a JSON object");
      if (file.contains("command")) {
        if (file.at("command") != command_) {
          throw UsageError("--config: file is for command '" + file.at("command").dump() + "'");
        }
        file.erase("command");
      }
      file.erase("version");
      check_known(file, out, "");
      out.merge_patch(file);
      // merge_patch drops nulls; keep optional keys present.
      for (const auto& [key, value] : defaults_.items()) {
        if (!out.contains(key)) out[key] = value;
      }
    }
    for (const auto& apply : flags_) apply(out);
    out["command"] = command_;
    out["version"] = kVersion;
    return out;
  }

 private:
  template <typename T>
  CLI::Option* bind(const std::string& flag, const std::string& pointer, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app_->add_option(flag, *value, help);
    flags_.push_back([opt, value, pointer](json& out) {
      if (opt->count() > 0) out[json::json_pointer(pointer)] = *value;
    });
    return opt;
  }

  static void check_known(const json& file, const json& known, const std::string& prefix) {
    for (const auto& [key, value] : file.items()) {
      if (!known.contains(key)) throw UsageError("--config: unknown key '" + prefix + key + "'");
      if (value.is_object() && known.at(key).is_object()) {
        check_known(value, known.at(key), prefix + key + ".");
      }
    }
  }

  CLI::App* app_;
  std::string command_;
  std::string config_path_;
  json defaults_;
  std::vector<std::function<void(json&)>> flags_;
};

template <typename T>
T get(const json& cfg, const std::string& key) {
  const auto& v = cfg.at(key);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw UsageError("setting '" + key + "' has the wrong type: " + v.dump());
  }
}

std::optional<std::string> get_path(const json& cfg, const std::string& key) {
  if (cfg.at(key).is_null()) return std::nullopt;
  return get<std::string>(cfg, key);
}

std::string require_path(const json& cfg, const std::string& key, const std::string& flag) {
  auto p = get_path(cfg, key);
  if (!p || p->empty()) throw UsageError(flag + " is required");
  return *p;
}

mixreg::RegistrationConfig registration_config(const json& cfg) {
  mixreg::RegistrationConfig rc;
  try {
    rc = cfg.at("registration").get<mixreg::RegistrationConfig>();
    rc.optimizer.validate();
  } catch (const json::exception& e) {
    throw UsageError(std::string("registration settings: ") + e.what());
  } catch (const mixreg::ParameterError& e) {
    throw UsageError(std::string("registration settings: ") + e.what());
  }
  if (rc.levels < 1) throw UsageError("--levels must be >= 1");
  if (rc.metric.bins < 8 || rc.metric.bins > 256) throw UsageError("--bins must be in [8, 256]");
  if (rc.metric.radius < 1 || rc.metric.radius > 3) throw UsageError("--kernel-radius must be 1, 2 or 3");
  return rc;
}

double checked_rate(double rate, const std::string& flag) {
  if (!(rate > 0.0 && rate <= 1.0)) throw UsageError(flag + " must be in (0, 1]");
  return rate;
}

std::uint64_t seed_of(const json& cfg) { return get<std::uint64_t>(cfg, "seed"); }

/// Loads a volume and brings it onto the 1mm isotropic grid registration
/// works on.
mixreg::Volume load_isotropic(const fs::path& path, mixreg::Interpolation interp) {
  mixreg::Volume v = mixreg::load_volume(path);
  if ((v.spacing().array() - 1.0).abs().maxCoeff() > 1e-9) v = mixreg::resample_isotropic(v, 1.0, interp);
  return v;
}

std::vector<double> read_betas(const json& cfg, int levels) {
  const auto path = get_path(cfg, "betas");
  if (!path) throw UsageError("--betas is required for the mixed sampler");
  json j = mixreg::read_json_file(*path);
  std::vector<double> betas = mixreg::betas_from_json(j);
  if (static_cast<int>(betas.size()) != levels) {
    throw UsageError("--betas: file has " + std::to_string(betas.size()) + " levels, registration uses " +
                     std::to_string(levels));
  }
  return betas;
}

mixreg::SamplerSpec sampler_spec(const std::string& name, const json& cfg, int levels) {
  mixreg::SamplerKind kind;
  try {
    kind = mixreg::sampler_kind_from_string(name);
  } catch (const mixreg::ParameterError&) {
    throw UsageError("--sampler: unknown sampler '" + name + "' (expected urs, gms or mixed)");
  }
  if (kind == mixreg::SamplerKind::kMixed) return {kind, read_betas(cfg, levels)};
  return {kind, {}};
}

std::vector<mixreg::TrainingPair> load_pairs(const fs::path& manifest, const mixreg::RegistrationConfig& rc) {
  const auto entries = mixreg::manifest_from_json(mixreg::read_json_file(manifest), manifest.parent_path());
  if (entries.empty()) throw UsageError("--pairs: manifest lists no pairs");
  std::vector<mixreg::TrainingPair> pairs;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    mixreg::Volume fixed = load_isotropic(e.fixed, rc.interpolation);
    mixreg::Volume moving = load_isotropic(e.moving, rc.interpolation);
    mixreg::TrainingPair tp;
    tp.id = std::to_string(i) + ":" + e.fixed.stem().string();
    tp.probes = mixreg::probe_points(fixed);
    tp.gold = e.gold;
    tp.pair = std::make_shared<const mixreg::PreparedPair>(std::move(fixed), std::move(moving), rc.levels,
                                                            rc.interpolation);
    pairs.push_back(std::move(tp));
  }
  return pairs;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

mixreg::RigidParams parse_params(const std::string& text, const mixreg::Vec3& center) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--params: '" + item + "' is not a number");
    }
  }
  if (values.size() != 6) throw UsageError("--params: expected 6 comma-separated values tx,ty,tz,rx,ry,rz");
  mixreg::Vec6 v;
  for (int k = 0; k < 6; ++k) v[k] = values[static_cast<std::size_t>(k)];
  return mixreg::RigidParams::from_vector(v, center);
}

// --- phantom -------------------------------------------------------------------

void run_phantom(const json& cfg) {
  const int size = get<int>(cfg, "size");
  if (size < 32) throw UsageError("--size must be >= 32");
  const std::uint64_t seed = seed_of(cfg);
  const std::string out = require_path(cfg, "out", "--out");
  const std::string provenance = json{{"run_config", cfg}}.dump();

  const mixreg::Volume fixed = mixreg::make_phantom(size, seed);
  mixreg::save_volume(fixed, out, provenance);

  const auto moving_path = get_path(cfg, "make_moving");
  const auto gold_path = get_path(cfg, "gold");
  const auto params = get_path(cfg, "params");
  if (!moving_path) {
    if (gold_path || params) throw UsageError("--gold and --params need --make-moving");
    return;
  }
  const double noise = get<double>(cfg, "noise");
  if (!(noise >= 0.0)) throw UsageError("--noise must be >= 0");
  const double gamma = get<double>(cfg, "gamma");
  if (!(gamma > 0.0)) throw UsageError("--gamma must be > 0");

  mixreg::RigidParams gold;
  if (params) {
    gold = parse_params(*params, fixed.center());
  } else {
    mixreg::CounterRng rng(mixreg::derive_seed(seed, {1}));
    gold = mixreg::random_rigid(rng, 10.0, 0.1, fixed.center());
  }
  std::optional<mixreg::MovingImage> mv;
  try {
    mv = mixreg::make_moving(fixed, gold, {gamma, noise}, mixreg::derive_seed(seed, {2}));
  } catch (const mixreg::ParameterError& e) {
    throw UsageError(std::string("--params: ") + e.what());
  }
  mixreg::save_volume(mv->volume, *moving_path, provenance);
  if (gold_path) mixreg::write_json_file(*gold_path, json{{"run_config", cfg}, {"gold", mv->gold}});
}

// --- register -----------------------------------------------------------------

void run_register(const json& cfg) {
  const auto rc = registration_config(cfg);
  const double rate = checked_rate(get<double>(cfg, "rate"), "--rate");
  const auto spec = sampler_spec(get<std::string>(cfg, "sampler"), cfg, rc.levels);
  const std::string fixed_path = require_path(cfg, "fixed", "--fixed");
  const std::string moving_path = require_path(cfg, "moving", "--moving");
  const std::string out = require_path(cfg, "out", "--out");

  const mixreg::Volume fixed = load_isotropic(fixed_path, rc.interpolation);
  const mixreg::Volume moving = load_isotropic(moving_path, rc.interpolation);
  const auto result = mixreg::register_volumes(fixed, moving, spec, rate, rc, seed_of(cfg));

  json doc = {{"run_config", cfg}, {"result", result}};
  if (const auto gold_path = get_path(cfg, "gold")) {
    json g = mixreg::read_json_file(*gold_path);
    const auto gold = (g.contains("gold") ? g.at("gold") : g).get<mixreg::RigidParams>();
    const auto probes = mixreg::probe_points(fixed);
    const auto outcome = mixreg::evaluate_case(result.theta, gold, probes);
    doc["evaluation"] = {{"tre_mm", outcome.tre_per_point},
                         {"mean_tre_mm", outcome.mean_tre()},
                         {"max_tre_mm", outcome.max_tre()},
                         {"failed", outcome.failed}};
  }
  mixreg::write_json_file(out, doc);
}

// --- train --------------------------------------------------------------------

void run_train(const json& cfg) {
  const auto rc = registration_config(cfg);
  const double rate = checked_rate(get<double>(cfg, "rate"), "--rate");
  const int trials = get<int>(cfg, "mc");
  if (trials < 1) throw UsageError("--mc must be >= 1");
  mixreg::PsoConfig pso;
  pso.particles = get<int>(cfg, "particles");
  pso.iterations = get<int>(cfg, "iters");
  pso.threads = get<int>(cfg, "threads");
  pso.seed = mixreg::derive_seed(seed_of(cfg), {0});
  try {
    pso.validate();
  } catch (const mixreg::ParameterError& e) {
    throw UsageError(e.what());
  }
  const std::string manifest = require_path(cfg, "pairs", "--pairs");
  const std::string out = require_path(cfg, "out", "--out");

  const auto pairs = load_pairs(manifest, rc);
  const auto training = mixreg::train_cascade(pairs, trials, pso, rc, rate, seed_of(cfg));

  json betas = mixreg::betas_to_json(training.betas());
  betas["run_config"] = cfg;
  mixreg::write_json_file(out, betas);
  if (const auto report = get_path(cfg, "report")) {
    mixreg::write_json_file(*report, json{{"run_config", cfg}, {"training", training}});
  }
}

// --- sweep --------------------------------------------------------------------

void run_sweep(const json& cfg) {
  const auto rc = registration_config(cfg);
  mixreg::SweepConfig sc;
  sc.registration = rc;
  sc.rates = get<std::vector<double>>(cfg, "rates");
  if (sc.rates.empty()) throw UsageError("--rates must list at least one rate");
  for (double r : sc.rates) checked_rate(r, "--rates");
  sc.trials = get<int>(cfg, "trials");
  if (sc.trials < 1) throw UsageError("--trials must be >= 1");
  sc.seed = seed_of(cfg);
  sc.threads = get<int>(cfg, "threads");
  if (sc.threads < 1) throw UsageError("--threads must be >= 1");
  sc.failure_threshold = get<double>(cfg, "failure_threshold");
  if (!(sc.failure_threshold > 0.0)) throw UsageError("--failure-threshold must be > 0");

  std::vector<mixreg::SweepSampler> samplers;
  for (const auto& name : get<std::vector<std::string>>(cfg, "samplers")) {
    samplers.push_back({name, sampler_spec(name, cfg, rc.levels)});
  }
  if (samplers.empty()) throw UsageError("--samplers must list at least one sampler");
  const std::string manifest = require_path(cfg, "pairs", "--pairs");
  const std::string out = require_path(cfg, "out", "--out");

  const auto pairs = load_pairs(manifest, rc);
  const auto report = mixreg::sweep(pairs, samplers, sc);
  for (const auto& row : report.rows) {
    if (!row.error.empty()) {
      std::cerr << "mixreg sweep: case " << row.pair_id << " " << row.sampler << " rate " << row.rate
                << " failed: " << row.error << "\n";
    }
  }
  const std::vector<std::string> preamble = {"mixreg " + std::string(kVersion),
                                             "run_config " + cfg.dump()};
  std::ostringstream rows;
  mixreg::write_sweep_csv(rows, report, preamble);
  write_text(out, rows.str());
  if (const auto agg = get_path(cfg, "aggregate")) {
    std::ostringstream text;
    mixreg::write_aggregate_csv(text, report, preamble);
    write_text(*agg, text.str());
  }
}

// --- mask ---------------------------------------------------------------------

void run_mask(const json& cfg) {
  const auto rc = registration_config(cfg);
  const double rate = checked_rate(get<double>(cfg, "rate"), "--rate");
  const int level = get<int>(cfg, "level");
  if (level < 1 || level > rc.levels) {
    throw UsageError("--level must be in [1, " + std::to_string(rc.levels) + "]");
  }
  const auto spec = sampler_spec(get<std::string>(cfg, "sampler"), cfg, rc.levels);
  const std::string volume_path = require_path(cfg, "volume", "--volume");
  const std::string out = require_path(cfg, "out", "--out");

  const mixreg::Volume v = load_isotropic(volume_path, rc.interpolation);
  const mixreg::Pyramid pyramid = mixreg::build_pyramid(v, rc.levels, rc.interpolation);
  const mixreg::Volume& lv = pyramid.level(level);
  const double m = std::min(rate * static_cast<double>(v.size()), static_cast<double>(lv.size()));
  const auto urs = [&] { return mixreg::build_urs(lv.size(), m, level); };
  const auto gms = [&] { return mixreg::build_gms(mixreg::gradient_magnitude(lv), m, level); };
  std::optional<mixreg::SamplingDistribution> dist;
  switch (spec.kind) {
    case mixreg::SamplerKind::kUrs: dist = urs(); break;
    case mixreg::SamplerKind::kGms: dist = gms(); break;
    case mixreg::SamplerKind::kMixed: dist = mixreg::build_mixed(urs(), gms(), spec.beta_at(level)); break;
  }
  const mixreg::Volume mask = mixreg::sampling_mask(lv, *dist, seed_of(cfg));
  mixreg::save_volume(mask, out, json{{"run_config", cfg}}.dump());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixreg: rigid registration with mixed URS/GMS voxel sampling"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto* phantom = app.add_subcommand("phantom", "write a seeded phantom and optionally a moving copy");
  Settings phantom_s(phantom, "phantom");
  phantom_s.add<int>("--size", "/size", 96, "voxels per axis");
  phantom_s.add<std::uint64_t>("--seed", "/seed", 0, "random seed");
  phantom_s.add_optional<std::string>("--out", "/out", "fixed volume output (.rvol)");
  phantom_s.add_optional<std::string>("--make-moving", "/make_moving", "moving volume output (.rvol)");
  phantom_s.add_optional<std::string>("--params", "/params", "gold transform tx,ty,tz,rx,ry,rz (mm, rad)");
  phantom_s.add<double>("--noise", "/noise", 0.0, "moving-image noise sd, fraction of the intensity span");
  phantom_s.add<double>("--gamma", "/gamma", 0.7, "moving-image intensity remap exponent");
  phantom_s.add_optional<std::string>("--gold", "/gold", "gold transform output (.json)");

  auto* reg = app.add_subcommand("register", "register a moving volume to a fixed volume");
  Settings reg_s(reg, "register");
  reg_s.add_optional<std::string>("--fixed", "/fixed", "fixed volume (.rvol or .nii)");
  reg_s.add_optional<std::string>("--moving", "/moving", "moving volume (.rvol or .nii)");
  reg_s.add<std::string>("--sampler", "/sampler", "urs", "urs, gms or mixed");
  reg_s.add_optional<std::string>("--betas", "/betas", "per-level mixing weights (.json), needed for mixed");
  reg_s.add<double>("--rate", "/rate", 0.01, "sampling rate M/N in (0, 1]");
  reg_s.add<std::uint64_t>("--seed", "/seed", 0, "random seed");
  reg_s.add_optional<std::string>("--gold", "/gold", "optional gold transform (.json) to score the result");
  reg_s.add_optional<std::string>("--out", "/out", "result output (.json)");
  reg_s.add_registration_flags();

  auto* train = app.add_subcommand("train", "learn per-level mixing weights on a training manifest");
  Settings train_s(train, "train");
  train_s.add_optional<std::string>("--pairs", "/pairs", "training manifest (.json)");
  train_s.add<double>("--rate", "/rate", 0.001, "sampling rate M/N in (0, 1]");
  train_s.add<int>("--mc", "/mc", 3, "Monte-Carlo registrations per pair and candidate");
  train_s.add<int>("--particles", "/particles", 10, "swarm size");
  train_s.add<int>("--iters", "/iters", 20, "swarm iterations per level");
  train_s.add<int>("--threads", "/threads", 1, "concurrent objective evaluations");
  train_s.add<std::uint64_t>("--seed", "/seed", 0, "random seed");
  train_s.add_optional<std::string>("--out", "/out", "learned weights output (.json)");
  train_s.add_optional<std::string>("--report", "/report", "training report output (.json)");
  train_s.add_registration_flags();

  auto* sw = app.add_subcommand("sweep", "failure rate and accuracy over samplers and rates");
  Settings sweep_s(sw, "sweep");
  sweep_s.add_optional<std::string>("--pairs", "/pairs", "pair manifest (.json)");
  sweep_s.add<std::vector<std::string>>("--samplers", "/samplers", {"urs", "gms", "mixed"},
                                        "comma-separated samplers")
      ->delimiter(',');
  sweep_s.add_optional<std::string>("--betas", "/betas", "mixing weights (.json), needed for mixed");
  sweep_s.add<std::vector<double>>("--rates", "/rates", mixreg::default_rates(), "comma-separated rates")
      ->delimiter(',');
  sweep_s.add<int>("--trials", "/trials", 5, "seeded trials per pair");
  sweep_s.add<int>("--threads", "/threads", 1, "worker threads");
  sweep_s.add<double>("--failure-threshold", "/failure_threshold", mixreg::kDefaultFailureThresholdMm,
                      "probe error in mm that marks a failure");
  sweep_s.add<std::uint64_t>("--seed", "/seed", 0, "random seed");
  sweep_s.add_optional<std::string>("--out", "/out", "per-case CSV output");
  sweep_s.add_optional<std::string>("--aggregate", "/aggregate", "aggregate CSV output");
  sweep_s.add_registration_flags();

  auto* mask = app.add_subcommand("mask", "export the voxels one draw of a sampler selects");
  Settings mask_s(mask, "mask");
  mask_s.add_optional<std::string>("--volume", "/volume", "input volume (.rvol or .nii)");
  mask_s.add<std::string>("--sampler", "/sampler", "urs", "urs, gms or mixed");
  mask_s.add_optional<std::string>("--betas", "/betas", "mixing weights (.json), needed for mixed");
  mask_s.add<int>("--level", "/level", 1, "pyramid level");
  mask_s.add<double>("--rate", "/rate", 0.005, "sampling rate M/N in (0, 1]");
  mask_s.add<std::uint64_t>("--seed", "/seed", 0, "random seed");
  mask_s.add_optional<std::string>("--out", "/out", "mask output (.rvol)");
  mask_s.add_registration_flags();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (phantom->parsed()) run_phantom(phantom_s.resolve());
    if (reg->parsed()) run_register(reg_s.resolve());
    if (train->parsed()) run_train(train_s.resolve());
    if (sw->parsed()) run_sweep(sweep_s.resolve());
    if (mask->parsed()) run_mask(mask_s.resolve());
  } catch (const UsageError& e) {
    std::cerr << "mixreg: usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mixreg: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
