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

// Tabular architecture dataset and its feature schema.
//
// A feature vector is the 28 genome slots, five derived quantities (depth,
// parameter count, mean widening factor, total branches, tile utilization at
// tile size 512) and three device-context values (tile size, programming
// noise, mean drift exponent) so rows of one architecture under different
// device settings stay distinguishable.
//
// On disk a dataset is newline-delimited JSON: every line is an EvalRecord
// object extended with "arch", "rpu", "features" and "provenance".

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "imcnas/arch_space.hpp"
#include "imcnas/evaluation.hpp"
#include "imcnas/gbdt.hpp"

namespace imcnas::surrogate {

using arch::Architecture;
using sim::RpuConfig;

const std::vector<std::string>& feature_names();
std::size_t feature_count() noexcept;

std::vector<double> featurize(const Architecture& arch, const RpuConfig& rpu = {});

enum class Provenance { kLhs, kSearchHarvested };
std::string_view to_string(Provenance p) noexcept;
Provenance parse_provenance(std::string_view s);

struct DatasetRow {
  Architecture arch;
  RpuConfig rpu;
  std::vector<double> features;
  eval::EvalRecord record;
  Provenance provenance = Provenance::kLhs;

  double acc_1day() const noexcept { return record.acc_1day_mean; }
  double avm() const noexcept { return record.avm; }
  double acc_1day_std() const noexcept { return record.acc_1day_std; }
  /// Unique per (architecture, device settings).
  std::string key() const;
};

std::string row_key(const Architecture& arch, const RpuConfig& rpu);

class Dataset {
 public:
  /// Returns false and keeps the existing row when the key is already present.
  bool add(DatasetRow row);
  bool contains(const std::string& key) const;

  const std::vector<DatasetRow>& rows() const noexcept { return rows_; }
  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

  gbdt::FeatureMatrix features() const;
  std::vector<double> acc_1day() const;
  std::vector<double> avm() const;
  std::vector<double> acc_1day_std() const;

  Dataset subset(const std::vector<std::size_t>& indices) const;
  /// Deterministic shuffle of row indices into (train, held-out).
  std::pair<Dataset, Dataset> split(double train_fraction, std::uint64_t seed) const;

  void write_ndjson(std::ostream& os) const;
  static Dataset read_ndjson(std::istream& is);
  void save(const std::string& path) const;
  static Dataset load(const std::string& path);

 private:
  std::vector<DatasetRow> rows_;
  std::vector<std::string> keys_;  // sorted, for duplicate checks
};

nlohmann::json row_to_json(const DatasetRow& row);
DatasetRow row_from_json(const nlohmann::json& j);

struct BuildOptions {
  arch::SearchSpace space{};
  std::optional<std::int64_t> t_p;
  int n_trials = 5;
  std::size_t workers = 1;
};

struct BuildReport {
  std::size_t evaluated = 0;
  std::size_t dropped = 0;  // rows whose evaluation failed
};

/// n_lhs LHS architectures, each evaluated under every config of rpu_grid.
/// Rows come out grouped by architecture, then by grid order.
Dataset build_dataset(std::size_t n_lhs, const eval::Backend& backend, const std::vector<RpuConfig>& rpu_grid,
                      std::uint64_t seed, const BuildOptions& opts = {}, BuildReport* report = nullptr);

}  // namespace imcnas::surrogate
