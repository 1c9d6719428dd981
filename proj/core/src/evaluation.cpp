// Copyright 2026 The imcnas Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "imcnas/evaluation.hpp"

#include <algorithm>
#include <cmath>

namespace imcnas::eval {

using nlohmann::json;

std::vector<double> default_times(const RpuConfig& rpu) {
  return {sim::effective_time(kOneSecond, rpu), kOneDay, kOneMonth};
}

namespace {

std::size_t index_of(const std::vector<double>& times, double t, const char* what) {
  auto it = std::find(times.begin(), times.end(), t);
  if (it == times.end()) throw Error(std::string("evaluation times must include ") + what);
  return static_cast<std::size_t>(it - times.begin());
}

double column_mean(const std::vector<std::vector<double>>& acc, std::size_t col) {
  double s = 0.0;
  for (const auto& row : acc) s += row[col];
  return s / static_cast<double>(acc.size());
}

}  // namespace

EvalRecord make_record(std::string arch_id, std::vector<double> times, std::vector<std::vector<double>> acc,
                       std::string backend, std::uint64_t seed) {
  if (acc.empty()) throw Error("make_record: no trials");
  for (const auto& row : acc) {
    if (row.size() != times.size()) throw ShapeError("make_record: trial row length differs from times");
  }
  const std::size_t day = index_of(times, kOneDay, "one day");
  const std::size_t month = index_of(times, kOneMonth, "one month");

  EvalRecord rec;
  rec.acc_1day_mean = column_mean(acc, day);
  if (acc.size() > 1) {
    double ss = 0.0;
    for (const auto& row : acc) ss += (row[day] - rec.acc_1day_mean) * (row[day] - rec.acc_1day_mean);
    rec.acc_1day_std = std::sqrt(ss / static_cast<double>(acc.size() - 1));
  }
  rec.avm = column_mean(acc, 0) - column_mean(acc, month);
  rec.arch_id = std::move(arch_id);
  rec.times = std::move(times);
  rec.acc = std::move(acc);
  rec.backend = std::move(backend);
  rec.seed = seed;
  return rec;
}

json to_json(const EvalRecord& rec) {
  return {{"schema_version", kSchemaVersion}, {"arch_id", rec.arch_id},     {"times", rec.times},
          {"acc", rec.acc},                   {"acc_1day_mean", rec.acc_1day_mean},
          {"acc_1day_std", rec.acc_1day_std}, {"avm", rec.avm},           {"backend", rec.backend},
          {"seed", rec.seed}};
}

EvalRecord record_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) throw SchemaError("unsupported EvalRecord schema_version");
    EvalRecord rec;
    rec.arch_id = j.at("arch_id").get<std::string>();
    rec.times = j.at("times").get<std::vector<double>>();
    rec.acc = j.at("acc").get<std::vector<std::vector<double>>>();
    rec.acc_1day_mean = j.at("acc_1day_mean").get<double>();
    rec.acc_1day_std = j.at("acc_1day_std").get<double>();
    rec.avm = j.at("avm").get<double>();
    rec.backend = j.at("backend").get<std::string>();
    rec.seed = j.at("seed").get<std::uint64_t>();
    return rec;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed EvalRecord: ") + e.what());
  }
}

json rpu_to_json(const RpuConfig& rpu) {
  return {{"tile_size", rpu.tile_size},
          {"g_max", rpu.g_max},
          {"prog_noise_std", rpu.prog_noise_std},
          {"nu_mean", rpu.nu_mean},
          {"nu_std", rpu.nu_std},
          {"t0", rpu.t0},
          {"dac_bits", rpu.dac_bits},
          {"adc_bits", rpu.adc_bits},
          {"input_bound", rpu.input_bound},
          {"output_bound", rpu.output_bound},
          {"mapping", std::string(to_string(rpu.mapping))}};
}

RpuConfig rpu_from_json(const json& j) {
  RpuConfig rpu;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "tile_size") rpu.tile_size = v.get<int>();
      else if (key == "g_max") rpu.g_max = v.get<double>();
      else if (key == "prog_noise_std") rpu.prog_noise_std = v.get<double>();
      else if (key == "nu_mean") rpu.nu_mean = v.get<double>();
      else if (key == "nu_std") rpu.nu_std = v.get<double>();
      else if (key == "t0") rpu.t0 = v.get<double>();
      else if (key == "dac_bits") rpu.dac_bits = v.get<int>();
      else if (key == "adc_bits") rpu.adc_bits = v.get<int>();
      else if (key == "input_bound") rpu.input_bound = v.get<double>();
      else if (key == "output_bound") rpu.output_bound = v.get<double>();
      else if (key == "mapping") rpu.mapping = parse_tile_mapping(v.get<std::string>());
      else throw SchemaError("unknown rpu key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed rpu config: ") + e.what());
  }
  return rpu;
}

std::vector<std::vector<double>> Backend::trials(const Architecture& arch, const RpuConfig& rpu,
                                                 std::span<const double> times,
                                                 std::span<const std::uint64_t> trial_seeds) const {
  std::vector<std::vector<double>> out;
  out.reserve(trial_seeds.size());
  for (std::uint64_t s : trial_seeds) out.push_back(trial(arch, rpu, times, s));
  return out;
}

std::vector<std::uint64_t> trial_seeds(const Architecture& arch, int n_trials, std::uint64_t seed) {
  std::vector<std::uint64_t> seeds;
  const std::uint64_t h = arch::arch_hash(arch);
  for (int i = 0; i < n_trials; ++i) seeds.push_back(derive_seed(seed, {h, static_cast<std::uint64_t>(i)}));
  return seeds;
}

EvalRecord evaluate(const Architecture& arch, const RpuConfig& rpu, const Backend& backend, int n_trials,
                    std::uint64_t seed) {
  if (n_trials < 1) throw Error("evaluate: n_trials must be >= 1");
  const std::string id = arch::arch_id(arch);
  auto times = default_times(rpu);
  std::vector<std::vector<double>> acc;
  try {
    acc = backend.trials(arch, rpu, times, trial_seeds(arch, n_trials, seed));
  } catch (const EvalError&) {
    throw;
  } catch (const std::exception& e) {
    throw EvalError(id, e.what());
  }
  if (acc.size() != static_cast<std::size_t>(n_trials)) throw EvalError(id, "backend returned wrong trial count");
  for (auto& row : acc) {
    if (row.size() != times.size()) throw EvalError(id, "backend returned wrong time count");
    for (double& a : row) {
      if (!std::isfinite(a)) throw EvalError(id, "backend returned a non-finite accuracy");
      a = std::clamp(a, 0.0, 1.0);
    }
  }
  return make_record(id, std::move(times), std::move(acc), backend.name(), seed);
}

std::unique_ptr<Backend> make_backend(BackendKind kind, const arch::InputShape& input, int num_classes) {
  switch (kind) {
    case BackendKind::kSyntheticOracle:
      return std::make_unique<SyntheticOracle>(OracleCoefficients{}, input, num_classes);
    case BackendKind::kTinyNet:
      return std::make_unique<TinyNetBackend>();
  }
  throw Error("unknown backend kind");
}

}  // namespace imcnas::eval
