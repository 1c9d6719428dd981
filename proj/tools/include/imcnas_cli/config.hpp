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

// Engine configuration.
//
// File grammar, one statement per line:
//
//   # comment             (also ';')
//   [section]
//   key = value
//
// Lists are comma separated. Optional values accept "none". Every key must
// be known; see EngineConfig::keys() for the full table with defaults.
// Layering, lowest to highest precedence: built-in defaults, the config file,
// environment variables IMCNAS__<SECTION>__<KEY> (case-insensitive), and
// `--set section.key=value` flags.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "imcnas/arch_space.hpp"
#include "imcnas/evaluation.hpp"
#include "imcnas/search.hpp"
#include "imcnas/surrogate.hpp"

namespace imcnas::cli {

struct EngineConfig {
  arch::SearchSpace space{};
  sim::RpuConfig rpu{};
  std::vector<int> grid_tile_sizes;         // empty: rpu.tile_size only
  std::vector<double> grid_prog_noise_stds; // empty: rpu.prog_noise_std only

  eval::BackendKind backend = eval::BackendKind::kSyntheticOracle;
  int n_trials = 5;
  eval::OracleCoefficients oracle{};
  eval::TinyNetOptions tiny_net{};

  std::size_t n_lhs = 1000;
  std::optional<std::int64_t> dataset_t_p;

  surrogate::SurrogateParams surrogate{};
  double train_fraction = 0.8;

  search::SearchConfig search{};

  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string out;

  /// Sets one dotted key from its text form; throws ConfigError naming it.
  void set(const std::string& dotted_key, const std::string& value);
  /// Cross-field checks; throws ConfigError.
  void check() const;

  /// Every device configuration of the grid, tile sizes outermost.
  std::vector<sim::RpuConfig> rpu_grid() const;
  /// Search settings with the shared fields (space, rpu, seed, trials,
  /// workers) filled in.
  search::SearchConfig search_config() const;
  std::unique_ptr<eval::Backend> make_backend() const;

  /// Effective configuration. `workers` and `out` are omitted so that results
  /// do not depend on parallelism or file location.
  nlohmann::json echo() const;

  /// Dotted names of every accepted key, in table order.
  static std::vector<std::string> keys();
};

/// Applies `key = value` lines from text; `origin` prefixes error messages.
void apply_ini(EngineConfig& cfg, const std::string& text, const std::string& origin = "config");
void apply_ini_file(EngineConfig& cfg, const std::string& path);
/// Applies IMCNAS__SECTION__KEY variables from `env` (name -> value).
void apply_env(EngineConfig& cfg, const std::map<std::string, std::string>& env);
std::map<std::string, std::string> process_env();
/// "section.key=value"
void apply_override(EngineConfig& cfg, const std::string& assignment);

}  // namespace imcnas::cli
