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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <map>
#include <ostream>
#include <thread>

#include "mixreg/bench.hpp"
#include "mixreg/error.hpp"
#include "mixreg/random.hpp"

namespace mixreg {
namespace {

std::string format_number(double x, const char* fmt = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

std::string format_rate(double rate) { return format_number(rate, "%.8g"); }

void write_preamble(std::ostream& out, const std::vector<std::string>& preamble) {
  for (const auto& line : preamble) out << "# " << line << '\n';
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

}  // namespace

std::vector<double> default_rates() { return {0.0002, 0.0004, 0.00065, 0.001, 0.005, 0.01}; }

SweepReport sweep(const std::vector<TrainingPair>& pairs, const std::vector<SweepSampler>& samplers,
                  const SweepConfig& cfg) {
  if (cfg.trials < 1) throw ParameterError("sweep needs at least one trial");
  SweepReport report;
  report.levels = cfg.registration.levels;

  struct Case {
    std::size_t pair, sampler, rate;
    int trial;
  };
  std::vector<Case> cases;
  for (std::size_t v = 0; v < pairs.size(); ++v)
    for (std::size_t s = 0; s < samplers.size(); ++s)
      for (std::size_t r = 0; r < cfg.rates.size(); ++r)
        for (int t = 0; t < cfg.trials; ++t) cases.push_back({v, s, r, t});
  report.rows.resize(cases.size());

  auto run_case = [&](std::size_t c) {
    const Case& cs = cases[c];
    const TrainingPair& pair = pairs[cs.pair];
    const SweepSampler& sampler = samplers[cs.sampler];
    SweepRow& row = report.rows[c];
    row.pair_id = pair.id;
    row.sampler = sampler.name;
    if (sampler.spec.kind == SamplerKind::kMixed) row.betas = sampler.spec.betas;
    row.rate = cfg.rates[cs.rate];
    row.trial_seed = derive_seed(cfg.seed, {cs.pair, static_cast<std::uint64_t>(cs.trial)});
    const auto start = std::chrono::steady_clock::now();
    try {
      const RegistrationResult result =
          register_prepared(*pair.pair, sampler.spec, row.rate, cfg.registration, row.trial_seed);
      const CaseOutcome outcome = evaluate_case(result.theta, pair.gold, pair.probes, cfg.failure_threshold);
      row.success = !outcome.failed;
      row.max_tre_mm = outcome.max_tre();
      if (row.success) row.mtre_mm = outcome.mean_tre();
    } catch (const std::exception& e) {
      row.success = false;
      row.error = e.what();
    }
    row.time_ms = 1e3 * std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const int workers = std::clamp(cfg.threads, 1, static_cast<int>(std::max<std::size_t>(cases.size(), 1)));
  if (workers == 1) {
    for (std::size_t c = 0; c < cases.size(); ++c) run_case(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < cases.size(); c = next++) run_case(c);
      });
    }
    for (auto& t : pool) t.join();
  }
  report.aggregate = aggregate_rows(report.rows);
  return report;
}

std::vector<AggregateRow> aggregate_rows(std::span<const SweepRow> rows) {
  // Keyed on first appearance so the table follows the sweep's nesting order.
  std::vector<std::pair<std::string, double>> order;
  std::map<std::pair<std::string, double>, std::vector<const SweepRow*>> groups;
  for (const SweepRow& row : rows) {
    const auto key = std::make_pair(row.sampler, row.rate);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&row);
  }
  std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    const auto first = [&](const auto& key) { return groups[key].front() - rows.data(); };
    return first(a) < first(b);
  });
  std::vector<AggregateRow> out;
  for (const auto& key : order) {
    const auto& members = groups[key];
    AggregateRow agg;
    agg.sampler = key.first;
    agg.rate = key.second;
    std::size_t failures = 0;
    double mtre_sum = 0.0;
    std::size_t successes = 0;
    std::vector<double> times;
    for (const SweepRow* row : members) {
      times.push_back(row->time_ms);
      if (!row->success) {
        ++failures;
        continue;
      }
      mtre_sum += row->mtre_mm.value_or(0.0);
      ++successes;
    }
    agg.failure_rate = static_cast<double>(failures) / static_cast<double>(members.size());
    if (successes > 0) agg.trimmed_mtre_mm = mtre_sum / static_cast<double>(successes);
    agg.median_time_ms = median(std::move(times));
    out.push_back(agg);
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const SweepReport& report, const std::vector<std::string>& preamble) {
  write_preamble(out, preamble);
  out << "pair_id,sampler";
  for (int r = 1; r <= report.levels; ++r) out << ",beta_level" << r;
  out << ",rate,trial_seed,success,mtre_mm,max_tre_mm,time_ms\n";
  for (const SweepRow& row : report.rows) {
    out << row.pair_id << ',' << row.sampler;
    for (int r = 0; r < report.levels; ++r) {
      out << ',';
      if (static_cast<std::size_t>(r) < row.betas.size()) out << format_number(row.betas[static_cast<std::size_t>(r)], "%.6g");
    }
    out << ',' << format_rate(row.rate) << ',' << row.trial_seed << ',' << (row.success ? 1 : 0) << ',';
    if (row.mtre_mm) out << format_number(*row.mtre_mm);
    out << ',';
    if (row.max_tre_mm) out << format_number(*row.max_tre_mm);
    out << ',' << format_number(row.time_ms, "%.3f") << '\n';
  }
}

void write_aggregate_csv(std::ostream& out, const SweepReport& report,
                         const std::vector<std::string>& preamble) {
  write_preamble(out, preamble);
  out << "sampler,rate,failure_rate,trimmed_mtre_mm,median_time_ms\n";
  for (const AggregateRow& row : report.aggregate) {
    out << row.sampler << ',' << format_rate(row.rate) << ',' << format_number(row.failure_rate) << ',';
    if (row.trimmed_mtre_mm) out << format_number(*row.trimmed_mtre_mm);
    out << ',' << format_number(row.median_time_ms, "%.3f") << '\n';
  }
}

}  // namespace mixreg
