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

#include "imcnas/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>

#include "imcnas/arch_json.hpp"
#include "imcnas/lhs.hpp"

namespace imcnas::surrogate {

using nlohmann::json;

const std::vector<std::string>& feature_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n{"oc0", "ks0", "m"};
    for (std::size_t i = 0; i < arch::kMaxBlocks; ++i) {
      for (const char* f : {"r", "b", "ct", "wf", "st"}) n.push_back("block" + std::to_string(i) + "." + f);
    }
    for (const char* f : {"depth", "param_count", "mean_wf", "total_branches", "util512", "rpu.tile_size",
                          "rpu.prog_noise_std", "rpu.nu_mean"})
      n.emplace_back(f);
    return n;
  }();
  return names;
}

std::size_t feature_count() noexcept { return arch::kGenomeLength + 8; }

std::vector<double> featurize(const Architecture& a, const RpuConfig& rpu) {
  const arch::Genome g = arch::encode(a);
  std::vector<double> f(g.begin(), g.end());
  const auto layers = arch::build_layers(a);
  const auto mats = arch::layer_matrices(layers);
  f.push_back(arch::depth(layers));
  f.push_back(static_cast<double>(arch::param_count(layers)));
  f.push_back(arch::mean_widening_factor(a));
  f.push_back(arch::total_branches(a));
  f.push_back(arch::tile_utilization(mats, 512, TileMapping::kColumnDifferential));
  f.push_back(rpu.tile_size);
  f.push_back(rpu.prog_noise_std);
  f.push_back(rpu.nu_mean);
  return f;
}

std::string_view to_string(Provenance p) noexcept {
  return p == Provenance::kLhs ? "lhs" : "search-harvested";
}

Provenance parse_provenance(std::string_view s) {
  if (s == "lhs") return Provenance::kLhs;
  if (s == "search-harvested") return Provenance::kSearchHarvested;
  throw SchemaError("unknown provenance '" + std::string(s) + "'");
}

std::string row_key(const Architecture& a, const RpuConfig& rpu) {
  return arch::arch_id(a) + "@" + to_hex(fnv1a64(eval::rpu_to_json(rpu).dump()));
}

std::string DatasetRow::key() const { return row_key(arch, rpu); }

bool Dataset::add(DatasetRow row) {
  std::string k = row.key();
  auto it = std::lower_bound(keys_.begin(), keys_.end(), k);
  if (it != keys_.end() && *it == k) return false;
  if (row.features.size() != feature_count()) throw SchemaError("dataset row has the wrong feature count");
  keys_.insert(it, std::move(k));
  rows_.push_back(std::move(row));
  return true;
}

bool Dataset::contains(const std::string& key) const { return std::binary_search(keys_.begin(), keys_.end(), key); }

gbdt::FeatureMatrix Dataset::features() const {
  gbdt::FeatureMatrix x(static_cast<Eigen::Index>(rows_.size()), static_cast<Eigen::Index>(feature_count()));
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (std::size_t k = 0; k < feature_count(); ++k)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows_[i].features[k];
  }
  return x;
}

std::vector<double> Dataset::acc_1day() const {
  std::vector<double> v;
  for (const auto& r : rows_) v.push_back(r.acc_1day());
  return v;
}

std::vector<double> Dataset::avm() const {
  std::vector<double> v;
  for (const auto& r : rows_) v.push_back(r.avm());
  return v;
}

std::vector<double> Dataset::acc_1day_std() const {
  std::vector<double> v;
  for (const auto& r : rows_) v.push_back(r.acc_1day_std());
  return v;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  Dataset d;
  for (std::size_t i : indices) d.add(rows_.at(i));
  return d;
}

std::pair<Dataset, Dataset> Dataset::split(double train_fraction, std::uint64_t seed) const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("split: train fraction must be in (0, 1)");
  std::vector<std::size_t> idx(rows_.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(derive_seed(seed, {0x5b117}));
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
  std::vector<std::size_t> a(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> b(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {subset(a), subset(b)};
}

json row_to_json(const DatasetRow& row) {
  json j = eval::to_json(row.record);
  j["arch"] = arch::to_json(row.arch);
  j["rpu"] = eval::rpu_to_json(row.rpu);
  j["features"] = row.features;
  j["provenance"] = std::string(to_string(row.provenance));
  return j;
}

DatasetRow row_from_json(const json& j) {
  DatasetRow row;
  try {
    row.record = eval::record_from_json(j);
    row.arch = arch::architecture_from_json(j.at("arch"));
    row.rpu = eval::rpu_from_json(j.at("rpu"));
    row.features = j.at("features").get<std::vector<double>>();
    row.provenance = parse_provenance(j.at("provenance").get<std::string>());
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed dataset row: ") + e.what());
  } catch (const InvalidArchitecture& e) {
    throw SchemaError(std::string("malformed dataset row: ") + e.what());
  }
  if (row.features.size() != feature_count()) throw SchemaError("dataset row has the wrong feature count");
  if (row.record.arch_id != arch::arch_id(row.arch)) throw SchemaError("dataset row arch_id does not match its arch");
  return row;
}

void Dataset::write_ndjson(std::ostream& os) const {
  for (const auto& r : rows_) os << row_to_json(r).dump() << '\n';
}

Dataset Dataset::read_ndjson(std::istream& is) {
  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!d.add(row_from_json(j))) throw SchemaError("dataset line " + std::to_string(lineno) + ": duplicate row");
  }
  return d;
}

void Dataset::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  write_ndjson(os);
  if (!os) throw Error("failed writing " + path);
}

Dataset Dataset::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path);
  return read_ndjson(is);
}

Dataset build_dataset(std::size_t n_lhs, const eval::Backend& backend, const std::vector<RpuConfig>& rpu_grid,
                      std::uint64_t seed, const BuildOptions& opts, BuildReport* report) {
  if (n_lhs < 1) throw Error("build_dataset: n_lhs must be >= 1");
  if (rpu_grid.empty()) throw Error("build_dataset: empty rpu grid");
  for (const auto& rpu : rpu_grid) rpu.check();

  arch::LhsOptions lhs_opts;
  lhs_opts.t_p = opts.t_p;
  const auto samples = arch::sample_lhs_cells(n_lhs, seed, opts.space, lhs_opts);

  const std::size_t g = rpu_grid.size();
  const std::size_t total = samples.size() * g;
  std::vector<std::optional<DatasetRow>> slots(total);
  parallel_for(total, opts.workers, [&](std::size_t i) {
    const auto& a = samples[i / g].arch;
    const auto& rpu = rpu_grid[i % g];
    try {
      DatasetRow row;
      row.record = eval::evaluate(a, rpu, backend, opts.n_trials, derive_seed(seed, {0xda7a, i % g}));
      row.arch = a;
      row.rpu = rpu;
      row.features = featurize(a, rpu);
      slots[i] = std::move(row);
    } catch (const EvalError&) {
      slots[i].reset();
    }
  });

  Dataset d;
  BuildReport rep;
  for (auto& s : slots) {
    if (!s) {
      ++rep.dropped;
      continue;
    }
    ++rep.evaluated;
    d.add(std::move(*s));
  }
  if (report) {
    *report = rep;
  } else if (rep.dropped > 0) {
    std::clog << "build_dataset: dropped " << rep.dropped << " rows after evaluation errors\n";
  }
  return d;
}

}  // namespace imcnas::surrogate
