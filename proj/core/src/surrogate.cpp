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

#include "imcnas/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace imcnas::surrogate {

using nlohmann::json;

void SurrogateParams::check() const {
  if (!(margin > 0.0)) throw ConfigError("surrogate.margin", "must be > 0");
  if (pairs_per_anchor < 1) throw ConfigError("surrogate.pairs_per_anchor", "must be >= 1");
  if (fine_tune_rounds < 1) throw ConfigError("surrogate.fine_tune_rounds", "must be >= 1");
  gbdt.check();
}

json SurrogateParams::to_json() const {
  json j = gbdt.to_json();
  j["margin"] = margin;
  j["pairs_per_anchor"] = pairs_per_anchor;
  j["fine_tune_rounds"] = fine_tune_rounds;
  return j;
}

SurrogateParams SurrogateParams::from_json(const json& j) {
  SurrogateParams p;
  p.gbdt = gbdt::Params::from_json(j);
  p.margin = j.at("margin").get<double>();
  p.pairs_per_anchor = j.at("pairs_per_anchor").get<int>();
  p.fine_tune_rounds = j.at("fine_tune_rounds").get<int>();
  return p;
}

double hinge_pair_loss(double p_better, double p_worse, double margin) noexcept {
  return std::max(0.0, margin - (p_better - p_worse));
}

double pairwise_hinge_loss(std::span<const double> scores, std::span<const double> labels, double margin) {
  if (scores.size() != labels.size()) throw ShapeError("pairwise_hinge_loss: length mismatch");
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[i] > labels[j]) {
        total += hinge_pair_loss(scores[i], scores[j], margin);
        ++pairs;
      }
    }
  }
  return pairs == 0 ? 0.0 : total / static_cast<double>(pairs);
}

namespace {

gbdt::FeatureMatrix to_matrix(const std::vector<std::vector<double>>& xs, std::size_t cols) {
  gbdt::FeatureMatrix x(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != cols) throw SchemaError("feature vector length differs from the schema");
    for (std::size_t k = 0; k < cols; ++k) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = xs[i][k];
  }
  return x;
}

gbdt::GradientFn squared_error(std::vector<double> y) {
  return [y = std::move(y)](std::span<const double> p, std::span<double> g, std::span<double> h, Rng&) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      g[i] = p[i] - y[i];
      h[i] = 1.0;
    }
  };
}

gbdt::GradientFn pairwise_hinge(std::vector<double> y, double margin, int per_anchor) {
  return [y = std::move(y), margin, per_anchor](std::span<const double> p, std::span<double> g, std::span<double> h,
                                                Rng& rng) {
    std::fill(g.begin(), g.end(), 0.0);
    std::fill(h.begin(), h.end(), 0.0);
    const std::size_t n = y.size();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < per_anchor; ++k) {
        const std::size_t j = pick(rng);
        if (j == i || y[i] == y[j]) continue;
        const std::size_t hi = y[i] > y[j] ? i : j;
        const std::size_t lo = hi == i ? j : i;
        if (margin - (p[hi] - p[lo]) > 0.0) {
          g[hi] -= 1.0;
          g[lo] += 1.0;
        }
        h[hi] += 1.0;
        h[lo] += 1.0;
      }
    }
  };
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return a.empty() ? 0.0 : std::sqrt(s / static_cast<double>(a.size()));
}

bool has_distinct(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) != v.end();
}

}  // namespace

void SurrogateEnsemble::fit(const std::vector<Retained>& rows, std::span<const double> weights, int rounds) {
  std::vector<std::vector<double>> xs;
  std::vector<double> acc, avm, sd;
  for (const auto& r : rows) {
    xs.push_back(r.x);
    acc.push_back(r.acc);
    avm.push_back(r.avm);
    sd.push_back(r.std);
  }
  const auto x = to_matrix(xs, schema_.size());
  const int nf = static_cast<int>(schema_.size());
  if (ranker_.num_features() == 0) {
    ranker_ = gbdt::Booster(nf, 0.0);
    avm_ = gbdt::Booster(nf, mean(avm));
    std_ = gbdt::Booster(nf, mean(sd));
  }
  gbdt::Params pr = params_.gbdt;
  ranker_.boost(x, pairwise_hinge(acc, params_.margin, params_.pairs_per_anchor), rounds, pr, weights);
  pr.seed = derive_seed(params_.gbdt.seed, {1});
  avm_.boost(x, squared_error(avm), rounds, pr, weights);
  pr.seed = derive_seed(params_.gbdt.seed, {2});
  std_.boost(x, squared_error(sd), rounds, pr, weights);
}

SurrogateEnsemble SurrogateEnsemble::train(const Dataset& ds, const SurrogateParams& params) {
  params.check();
  if (ds.size() < 2) throw TrainError("surrogate training needs at least two rows, got " + std::to_string(ds.size()));
  if (!has_distinct(ds.acc_1day())) throw TrainError("surrogate training needs distinct accuracy labels");
  SurrogateEnsemble m;
  m.params_ = params;
  m.schema_ = feature_names();
  for (const auto& r : ds.rows()) m.retained_.push_back({r.key(), r.features, r.acc_1day(), r.avm(), r.acc_1day_std()});
  m.fit(m.retained_, {}, params.gbdt.rounds);
  return m;
}

Prediction SurrogateEnsemble::predict(std::span<const double> features) const {
  if (features.size() != schema_.size())
    throw SchemaError("expected " + std::to_string(schema_.size()) + " features, got " +
                      std::to_string(features.size()));
  return {ranker_.predict(features), avm_.predict(features), std::max(0.0, std_.predict(features))};
}

Predictions SurrogateEnsemble::predict(const gbdt::FeatureMatrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != schema_.size())
    throw SchemaError("expected " + std::to_string(schema_.size()) + " features, got " + std::to_string(x.cols()));
  Predictions out;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto p = predict(std::span<const double>(x.row(i).data(), static_cast<std::size_t>(x.cols())));
    out.scores.push_back(p.score);
    out.avm.push_back(p.avm);
    out.std.push_back(p.std);
  }
  return out;
}

Predictions SurrogateEnsemble::predict(const std::vector<Architecture>& archs, const RpuConfig& rpu) const {
  Predictions out;
  for (const auto& a : archs) {
    const auto p = predict(featurize(a, rpu));
    out.scores.push_back(p.score);
    out.avm.push_back(p.avm);
    out.std.push_back(p.std);
  }
  return out;
}

SurrogateEnsemble SurrogateEnsemble::fine_tune(const Dataset& new_rows, FineTuneReport* report) const {
  if (new_rows.empty()) throw TrainError("fine_tune: no new rows");

  std::vector<Retained> merged = retained_;
  std::map<std::string, std::size_t> where;
  for (std::size_t i = 0; i < merged.size(); ++i) where[merged[i].key] = i;
  std::vector<char> is_new(merged.size(), 0);
  for (const auto& r : new_rows.rows()) {
    Retained item{r.key(), r.features, r.acc_1day(), r.avm(), r.acc_1day_std()};
    if (item.x.size() != schema_.size()) throw SchemaError("fine_tune: feature vector length differs from the schema");
    auto it = where.find(item.key);
    if (it != where.end()) {
      merged[it->second] = std::move(item);
      is_new[it->second] = 1;
    } else {
      where[item.key] = merged.size();
      merged.push_back(std::move(item));
      is_new.push_back(1);
    }
  }
  std::vector<double> all_acc;
  for (const auto& r : merged) all_acc.push_back(r.acc);
  if (!has_distinct(all_acc)) throw TrainError("fine_tune: accuracy labels are constant");

  const auto x_new = new_rows.features();
  const auto y_new = new_rows.acc_1day();
  const bool measurable = new_rows.size() >= 2 && has_distinct(y_new);
  auto tau_of = [&](const SurrogateEnsemble& m) { return measurable ? kendall_tau(m.predict(x_new).scores, y_new) : 0.0; };

  FineTuneReport rep;
  rep.tau_before = tau_of(*this);
  double w_new = 1.0;
  for (int attempt = 1; attempt <= 3; ++attempt, w_new *= 2.0) {
    SurrogateEnsemble cand = *this;
    cand.retained_ = merged;
    std::vector<double> weights(merged.size());
    for (std::size_t i = 0; i < merged.size(); ++i) weights[i] = is_new[i] ? w_new : 1.0;
    cand.fit(merged, weights, params_.fine_tune_rounds);
    rep.attempts = attempt;
    rep.tau_after = tau_of(cand);
    if (rep.tau_after >= rep.tau_before) {
      rep.accepted = true;
      if (report) *report = rep;
      return cand;
    }
  }
  rep.tau_after = rep.tau_before;
  if (report) *report = rep;
  return *this;
}

json SurrogateEnsemble::to_json() const {
  json retained = json::array();
  for (const auto& r : retained_)
    retained.push_back({{"key", r.key}, {"x", r.x}, {"acc", r.acc}, {"avm", r.avm}, {"std", r.std}});
  return {{"schema_version", kSchemaVersion},
          {"kind", "imcnas-surrogate"},
          {"feature_schema", schema_},
          {"margin", params_.margin},
          {"hyperparameters", params_.to_json()},
          {"ranker", ranker_.to_json()},
          {"avm_regressor", avm_.to_json()},
          {"std_regressor", std_.to_json()},
          {"retained", std::move(retained)}};
}

SurrogateEnsemble SurrogateEnsemble::from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) throw SchemaError("unsupported model schema_version");
    if (j.at("kind").get<std::string>() != "imcnas-surrogate") throw SchemaError("not a surrogate model file");
    SurrogateEnsemble m;
    m.schema_ = j.at("feature_schema").get<std::vector<std::string>>();
    if (m.schema_ != feature_names()) throw SchemaError("model feature schema differs from this build's featurizer");
    m.params_ = SurrogateParams::from_json(j.at("hyperparameters"));
    m.params_.margin = j.at("margin").get<double>();
    m.ranker_ = gbdt::Booster::from_json(j.at("ranker"));
    m.avm_ = gbdt::Booster::from_json(j.at("avm_regressor"));
    m.std_ = gbdt::Booster::from_json(j.at("std_regressor"));
    for (const auto* b : {&m.ranker_, &m.avm_, &m.std_}) {
      if (static_cast<std::size_t>(b->num_features()) != m.schema_.size())
        throw SchemaError("booster feature count differs from the schema");
    }
    for (const auto& r : j.at("retained")) {
      Retained item{r.at("key").get<std::string>(), r.at("x").get<std::vector<double>>(), r.at("acc").get<double>(),
                    r.at("avm").get<double>(), r.at("std").get<double>()};
      if (item.x.size() != m.schema_.size()) throw SchemaError("retained row length differs from the schema");
      m.retained_.push_back(std::move(item));
    }
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed model file: ") + e.what());
  }
}

void SurrogateEnsemble::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path);
  os << to_json().dump() << '\n';
  if (!os) throw Error("failed writing " + path);
}

SurrogateEnsemble SurrogateEnsemble::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw SchemaError("cannot parse " + path + ": " + e.what());
  }
  return from_json(j);
}

ModelMetrics evaluate_model(const SurrogateEnsemble& model, const Dataset& held_out) {
  if (held_out.size() < 2) throw Error("evaluate_model: need at least two held-out rows");
  const auto p = model.predict(held_out.features());
  const auto acc = held_out.acc_1day();
  const auto avm = held_out.avm();
  const auto sd = held_out.acc_1day_std();
  ModelMetrics m;
  m.rows = held_out.size();
  m.kendall_tau = kendall_tau(p.scores, acc);
  m.avm_rmse = rmse(p.avm, avm);
  m.std_rmse = rmse(p.std, sd);
  m.avm_label_std = rmse(avm, std::vector<double>(avm.size(), mean(avm)));
  m.std_label_std = rmse(sd, std::vector<double>(sd.size(), mean(sd)));
  return m;
}

}  // namespace imcnas::surrogate
