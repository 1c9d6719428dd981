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

#include "imcnas_cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

extern char** environ;

namespace imcnas::cli {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  T out{};
  const auto* end = t.data() + t.size();
  auto [p, ec] = std::from_chars(t.data(), end, out);
  if (ec != std::errc() || p != end || t.empty()) throw ConfigError(key, "cannot parse '" + v + "' as a number");
  return out;
}

int as_int(const std::string& k, const std::string& v) { return parse_number<int>(k, v); }
double as_double(const std::string& k, const std::string& v) { return parse_number<double>(k, v); }
std::uint64_t as_u64(const std::string& k, const std::string& v) { return parse_number<std::uint64_t>(k, v); }
std::size_t as_size(const std::string& k, const std::string& v) { return parse_number<std::size_t>(k, v); }

bool as_bool(const std::string& k, const std::string& v) {
  const std::string t = lower(trim(v));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(k, "cannot parse '" + v + "' as a boolean");
}

bool is_none(const std::string& v) { return lower(trim(v)) == "none"; }

std::optional<std::int64_t> as_opt_i64(const std::string& k, const std::string& v) {
  if (is_none(v)) return std::nullopt;
  return parse_number<std::int64_t>(k, v);
}

std::optional<double> as_opt_double(const std::string& k, const std::string& v) {
  if (is_none(v)) return std::nullopt;
  return as_double(k, v);
}

struct OracleField {
  const char* name;
  double eval::OracleCoefficients::*member;
};

constexpr OracleField kOracleFields[] = {
    {"acc_ceiling", &eval::OracleCoefficients::acc_ceiling},
    {"depth_weight", &eval::OracleCoefficients::depth_weight},
    {"preferred_depth", &eval::OracleCoefficients::preferred_depth},
    {"depth_spread", &eval::OracleCoefficients::depth_spread},
    {"width_weight", &eval::OracleCoefficients::width_weight},
    {"branch_weight", &eval::OracleCoefficients::branch_weight},
    {"preferred_branches", &eval::OracleCoefficients::preferred_branches},
    {"capacity_weight", &eval::OracleCoefficients::capacity_weight},
    {"capacity_scale", &eval::OracleCoefficients::capacity_scale},
    {"stem_kernel_weight", &eval::OracleCoefficients::stem_kernel_weight},
    {"noise_weight", &eval::OracleCoefficients::noise_weight},
    {"noise_saturation", &eval::OracleCoefficients::noise_saturation},
    {"drift_weight", &eval::OracleCoefficients::drift_weight},
    {"reference_nu", &eval::OracleCoefficients::reference_nu},
    {"reference_depth", &eval::OracleCoefficients::reference_depth},
    {"depth_exponent", &eval::OracleCoefficients::depth_exponent},
    {"utilization_weight", &eval::OracleCoefficients::utilization_weight},
    {"width_relief", &eval::OracleCoefficients::width_relief},
    {"jitter_width", &eval::OracleCoefficients::jitter_width},
    {"jitter_floor", &eval::OracleCoefficients::jitter_floor},
};

using Setter = std::function<void(EngineConfig&, const std::string& key, const std::string& value)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = [] {
    std::vector<std::pair<std::string, Setter>> t;
    auto add = [&](std::string k, Setter s) { t.emplace_back(std::move(k), std::move(s)); };

    add("space.oc0_min", [](EngineConfig& c, auto& k, auto& v) { c.space.oc0.lo = as_int(k, v); });
    add("space.oc0_max", [](EngineConfig& c, auto& k, auto& v) { c.space.oc0.hi = as_int(k, v); });
    add("space.ks0", [](EngineConfig& c, auto& k, auto& v) {
      c.space.ks0.clear();
      for (const auto& s : split_list(v)) c.space.ks0.push_back(as_int(k, s));
    });
    add("space.m_min", [](EngineConfig& c, auto& k, auto& v) { c.space.m.lo = as_int(k, v); });
    add("space.m_max", [](EngineConfig& c, auto& k, auto& v) { c.space.m.hi = as_int(k, v); });
    add("space.r_min", [](EngineConfig& c, auto& k, auto& v) { c.space.r.lo = as_int(k, v); });
    add("space.r_max", [](EngineConfig& c, auto& k, auto& v) { c.space.r.hi = as_int(k, v); });
    add("space.b_min", [](EngineConfig& c, auto& k, auto& v) { c.space.b.lo = as_int(k, v); });
    add("space.b_max", [](EngineConfig& c, auto& k, auto& v) { c.space.b.hi = as_int(k, v); });
    add("space.ct", [](EngineConfig& c, auto& k, auto& v) {
      c.space.ct.clear();
      for (char ch : trim(v)) {
        if (ch == ',' || ch == ' ') continue;
        try {
          c.space.ct.push_back(arch::parse_conv_type(std::string(1, ch)));
        } catch (const Error&) {
          throw ConfigError(k, "unknown convolution type '" + std::string(1, ch) + "'");
        }
      }
    });
    add("space.wf_min", [](EngineConfig& c, auto& k, auto& v) { c.space.wf.lo = as_int(k, v); });
    add("space.wf_max", [](EngineConfig& c, auto& k, auto& v) { c.space.wf.hi = as_int(k, v); });
    add("space.allow_skip_toggle", [](EngineConfig& c, auto& k, auto& v) { c.space.allow_skip_toggle = as_bool(k, v); });

    add("rpu.tile_size", [](EngineConfig& c, auto& k, auto& v) { c.rpu.tile_size = as_int(k, v); });
    add("rpu.g_max", [](EngineConfig& c, auto& k, auto& v) { c.rpu.g_max = as_double(k, v); });
    add("rpu.prog_noise_std", [](EngineConfig& c, auto& k, auto& v) { c.rpu.prog_noise_std = as_double(k, v); });
    add("rpu.nu_mean", [](EngineConfig& c, auto& k, auto& v) { c.rpu.nu_mean = as_double(k, v); });
    add("rpu.nu_std", [](EngineConfig& c, auto& k, auto& v) { c.rpu.nu_std = as_double(k, v); });
    add("rpu.t0", [](EngineConfig& c, auto& k, auto& v) { c.rpu.t0 = as_double(k, v); });
    add("rpu.dac_bits", [](EngineConfig& c, auto& k, auto& v) { c.rpu.dac_bits = as_int(k, v); });
    add("rpu.adc_bits", [](EngineConfig& c, auto& k, auto& v) { c.rpu.adc_bits = as_int(k, v); });
    add("rpu.input_bound", [](EngineConfig& c, auto& k, auto& v) { c.rpu.input_bound = as_double(k, v); });
    add("rpu.output_bound", [](EngineConfig& c, auto& k, auto& v) { c.rpu.output_bound = as_double(k, v); });
    add("rpu.mapping", [](EngineConfig& c, auto& k, auto& v) {
      try {
        c.rpu.mapping = parse_tile_mapping(trim(v));
      } catch (const Error&) {
        throw ConfigError(k, "expected column-differential or tile-differential");
      }
    });

    add("rpu_grid.tile_sizes", [](EngineConfig& c, auto& k, auto& v) {
      c.grid_tile_sizes.clear();
      for (const auto& s : split_list(v)) c.grid_tile_sizes.push_back(as_int(k, s));
    });
    add("rpu_grid.prog_noise_stds", [](EngineConfig& c, auto& k, auto& v) {
      c.grid_prog_noise_stds.clear();
      for (const auto& s : split_list(v)) c.grid_prog_noise_stds.push_back(as_double(k, s));
    });

    add("backend.kind", [](EngineConfig& c, auto& k, auto& v) {
      const std::string t = trim(v);
      if (t == "synthetic-oracle") {
        c.backend = eval::BackendKind::kSyntheticOracle;
      } else if (t == "tiny-net") {
        c.backend = eval::BackendKind::kTinyNet;
      } else {
        throw ConfigError(k, "expected synthetic-oracle or tiny-net");
      }
    });
    add("backend.n_trials", [](EngineConfig& c, auto& k, auto& v) { c.n_trials = as_int(k, v); });
    add("backend.tiny_features", [](EngineConfig& c, auto& k, auto& v) { c.tiny_net.features = as_int(k, v); });
    add("backend.tiny_train_samples", [](EngineConfig& c, auto& k, auto& v) { c.tiny_net.train_samples = as_int(k, v); });
    add("backend.tiny_test_samples", [](EngineConfig& c, auto& k, auto& v) { c.tiny_net.test_samples = as_int(k, v); });
    add("backend.tiny_separation", [](EngineConfig& c, auto& k, auto& v) { c.tiny_net.class_separation = as_double(k, v); });
    add("backend.tiny_data_seed", [](EngineConfig& c, auto& k, auto& v) { c.tiny_net.data_seed = as_u64(k, v); });
    add("backend.tiny_epochs", [](EngineConfig& c, auto& k, auto& v) { c.tiny_net.epochs = as_int(k, v); });
    add("backend.tiny_batch_size", [](EngineConfig& c, auto& k, auto& v) { c.tiny_net.batch_size = as_int(k, v); });
    add("backend.tiny_learning_rate", [](EngineConfig& c, auto& k, auto& v) { c.tiny_net.learning_rate = as_double(k, v); });
    add("backend.tiny_momentum", [](EngineConfig& c, auto& k, auto& v) { c.tiny_net.momentum = as_double(k, v); });
    add("backend.tiny_hwa_training", [](EngineConfig& c, auto& k, auto& v) { c.tiny_net.hwa_training = as_bool(k, v); });
    add("backend.tiny_train_noise_std", [](EngineConfig& c, auto& k, auto& v) { c.tiny_net.train_noise_std = as_double(k, v); });
    add("backend.tiny_drift_noise_horizon",
        [](EngineConfig& c, auto& k, auto& v) { c.tiny_net.drift_noise_horizon = as_double(k, v); });

    add("oracle.version", [](EngineConfig& c, auto& k, auto& v) { c.oracle.version = as_int(k, v); });
    for (const auto& f : kOracleFields) {
      const auto member = f.member;
      add(std::string("oracle.") + f.name,
          [member](EngineConfig& c, auto& k, auto& v) { c.oracle.*member = as_double(k, v); });
    }

    add("dataset.n_lhs", [](EngineConfig& c, auto& k, auto& v) { c.n_lhs = as_size(k, v); });
    add("dataset.t_p", [](EngineConfig& c, auto& k, auto& v) { c.dataset_t_p = as_opt_i64(k, v); });

    add("surrogate.margin", [](EngineConfig& c, auto& k, auto& v) { c.surrogate.margin = as_double(k, v); });
    add("surrogate.rounds", [](EngineConfig& c, auto& k, auto& v) { c.surrogate.gbdt.rounds = as_int(k, v); });
    add("surrogate.max_depth", [](EngineConfig& c, auto& k, auto& v) { c.surrogate.gbdt.max_depth = as_int(k, v); });
    add("surrogate.learning_rate", [](EngineConfig& c, auto& k, auto& v) { c.surrogate.gbdt.learning_rate = as_double(k, v); });
    add("surrogate.subsample", [](EngineConfig& c, auto& k, auto& v) { c.surrogate.gbdt.subsample = as_double(k, v); });
    add("surrogate.lambda", [](EngineConfig& c, auto& k, auto& v) { c.surrogate.gbdt.lambda = as_double(k, v); });
    add("surrogate.min_child_hessian",
        [](EngineConfig& c, auto& k, auto& v) { c.surrogate.gbdt.min_child_hessian = as_double(k, v); });
    add("surrogate.pairs_per_anchor", [](EngineConfig& c, auto& k, auto& v) { c.surrogate.pairs_per_anchor = as_int(k, v); });
    add("surrogate.fine_tune_rounds", [](EngineConfig& c, auto& k, auto& v) { c.surrogate.fine_tune_rounds = as_int(k, v); });
    add("surrogate.train_fraction", [](EngineConfig& c, auto& k, auto& v) { c.train_fraction = as_double(k, v); });

    add("search.population_size", [](EngineConfig& c, auto& k, auto& v) { c.search.population_size = as_size(k, v); });
    add("search.n_iterations", [](EngineConfig& c, auto& k, auto& v) { c.search.n_iterations = as_int(k, v); });
    add("search.time_budget", [](EngineConfig& c, auto& k, auto& v) { c.search.time_budget = as_opt_double(k, v); });
    add("search.t_p", [](EngineConfig& c, auto& k, auto& v) { c.search.t_p = as_opt_i64(k, v); });
    add("search.t_avm", [](EngineConfig& c, auto& k, auto& v) { c.search.t_avm = as_double(k, v); });
    add("search.p_depth", [](EngineConfig& c, auto& k, auto& v) { c.search.mutation_probs.depth = as_double(k, v); });
    add("search.p_width", [](EngineConfig& c, auto& k, auto& v) { c.search.mutation_probs.width = as_double(k, v); });
    add("search.p_other", [](EngineConfig& c, auto& k, auto& v) { c.search.mutation_probs.other = as_double(k, v); });
    add("search.growth_to_max_prob",
        [](EngineConfig& c, auto& k, auto& v) { c.search.growth_to_max_prob = as_opt_double(k, v); });
    add("search.surrogate_check_interval",
        [](EngineConfig& c, auto& k, auto& v) { c.search.surrogate_check_interval = as_int(k, v); });
    add("search.tau_floor", [](EngineConfig& c, auto& k, auto& v) { c.search.tau_floor = as_double(k, v); });
    add("search.max_cull_retries", [](EngineConfig& c, auto& k, auto& v) { c.search.max_cull_retries = as_int(k, v); });
    add("search.verify_top_k", [](EngineConfig& c, auto& k, auto& v) { c.search.verify_top_k = as_size(k, v); });
    add("search.eval_seed", [](EngineConfig& c, auto& k, auto& v) { c.search.eval_seed = as_u64(k, v); });

    add("run.seed", [](EngineConfig& c, auto& k, auto& v) { c.seed = as_u64(k, v); });
    add("run.workers", [](EngineConfig& c, auto& k, auto& v) { c.workers = std::max<std::size_t>(1, as_size(k, v)); });
    add("run.out", [](EngineConfig& c, auto&, auto& v) { c.out = trim(v); });
    return t;
  }();
  return table;
}

}  // namespace

void EngineConfig::set(const std::string& dotted_key, const std::string& value) {
  const std::string key = lower(trim(dotted_key));
  for (const auto& [name, setter] : setters()) {
    if (name == key) {
      setter(*this, key, value);
      return;
    }
  }
  throw ConfigError(key, "unknown key");
}

std::vector<std::string> EngineConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [name, setter] : setters()) out.push_back(name);
  return out;
}

void EngineConfig::check() const {
  try {
    space.check();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("space", e.what());
  }
  rpu.check();
  for (const auto& r : rpu_grid()) r.check();
  if (n_trials < 1) throw ConfigError("backend.n_trials", "must be >= 1");
  if (n_lhs < 1) throw ConfigError("dataset.n_lhs", "must be >= 1");
  if (dataset_t_p && *dataset_t_p <= 0) throw ConfigError("dataset.t_p", "must be > 0");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("surrogate.train_fraction", "must be in (0, 1)");
  surrogate.check();
  search_config().check();
}

std::vector<sim::RpuConfig> EngineConfig::rpu_grid() const {
  const std::vector<int> tiles = grid_tile_sizes.empty() ? std::vector<int>{rpu.tile_size} : grid_tile_sizes;
  const std::vector<double> noises =
      grid_prog_noise_stds.empty() ? std::vector<double>{rpu.prog_noise_std} : grid_prog_noise_stds;
  std::vector<sim::RpuConfig> out;
  for (int t : tiles) {
    for (double n : noises) {
      sim::RpuConfig r = rpu;
      r.tile_size = t;
      r.prog_noise_std = n;
      out.push_back(r);
    }
  }
  return out;
}

search::SearchConfig EngineConfig::search_config() const {
  search::SearchConfig s = search;
  s.space = space;
  s.rpu = rpu;
  s.seed = seed;
  s.n_trials = n_trials;
  s.workers = workers;
  return s;
}

std::unique_ptr<eval::Backend> EngineConfig::make_backend() const {
  if (backend == eval::BackendKind::kTinyNet) return std::make_unique<eval::TinyNetBackend>(tiny_net);
  return std::make_unique<eval::SyntheticOracle>(oracle);
}

json EngineConfig::echo() const {
  json grid = json::array();
  for (const auto& r : rpu_grid()) grid.push_back(eval::rpu_to_json(r));
  json backend_j = {{"kind", backend == eval::BackendKind::kTinyNet ? "tiny-net" : "synthetic-oracle"},
                    {"n_trials", n_trials}};
  if (backend == eval::BackendKind::kTinyNet) {
    backend_j["tiny_net"] = {{"features", tiny_net.features},
                             {"train_samples", tiny_net.train_samples},
                             {"test_samples", tiny_net.test_samples},
                             {"separation", tiny_net.class_separation},
                             {"data_seed", tiny_net.data_seed},
                             {"epochs", tiny_net.epochs},
                             {"batch_size", tiny_net.batch_size},
                             {"learning_rate", tiny_net.learning_rate},
                             {"momentum", tiny_net.momentum},
                             {"hwa_training", tiny_net.hwa_training},
                             {"train_noise_std", tiny_net.train_noise_std},
                             {"drift_noise_horizon", tiny_net.drift_noise_horizon}};
  } else {
    backend_j["oracle"] = oracle.to_json();
  }
  json surrogate_j = surrogate.to_json();
  surrogate_j["train_fraction"] = train_fraction;
  json search_j = search_config().to_json();
  return {{"schema_version", kSchemaVersion},
          {"rpu_grid", std::move(grid)},
          {"backend", std::move(backend_j)},
          {"dataset", {{"n_lhs", n_lhs}, {"t_p", dataset_t_p ? json(*dataset_t_p) : json(nullptr)}}},
          {"surrogate", std::move(surrogate_j)},
          {"search", std::move(search_j)},
          {"run", {{"seed", seed}}}};
}

void apply_ini(EngineConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where, "unterminated section header");
      section = lower(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ConfigError(where, "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where, "expected 'key = value'");
    if (section.empty()) throw ConfigError(where, "key outside of a section");
    const std::string key = section + "." + lower(trim(line.substr(0, eq)));
    cfg.set(key, trim(line.substr(eq + 1)));
  }
}

void apply_ini_file(EngineConfig& cfg, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("--config", "cannot read " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  apply_ini(cfg, ss.str(), path);
}

void apply_env(EngineConfig& cfg, const std::map<std::string, std::string>& env) {
  static const std::string prefix = "IMCNAS__";
  for (const auto& [name, value] : env) {
    if (name.rfind(prefix, 0) != 0) continue;
    const std::string rest = name.substr(prefix.size());
    const auto sep = rest.find("__");
    if (sep == std::string::npos) throw ConfigError(name, "expected IMCNAS__<SECTION>__<KEY>");
    cfg.set(lower(rest.substr(0, sep)) + "." + lower(rest.substr(sep + 2)), value);
  }
}

std::map<std::string, std::string> process_env() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string kv(*e);
    const auto eq = kv.find('=');
    if (eq != std::string::npos) out.emplace(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return out;
}

void apply_override(EngineConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(assignment, "expected section.key=value");
  cfg.set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

}  // namespace imcnas::cli
