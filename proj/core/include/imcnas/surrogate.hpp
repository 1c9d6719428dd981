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

// Surrogate models: a pairwise ranker for 1-day accuracy plus squared-error
// regressors for AVM and the 1-day standard deviation.
//
// For a pair with y_i > y_j the ranker pays max(0, m - (P(a_i) - P(a_j))).
// Each boosting round samples up to `pairs_per_anchor` partners per row; an
// active pair adds -1 to the gradient of the better row and +1 to the worse,
// and every sampled pair adds 1 to both hessians.
//
// Model file (JSON):
//   {"schema_version": 1, "kind": "imcnas-surrogate",
//    "feature_schema": [names...], "margin": m,
//    "hyperparameters": {...},
//    "ranker" | "avm_regressor" | "std_regressor":
//        {"base_score": s, "num_features": F,
//         "trees": [{"feature": [...], "threshold": [...],
//                    "left": [...], "right": [...], "value": [...]}]},
//    "retained": [{"key", "x", "acc", "avm", "std"}]}
// A tree is evaluated from node 0: while feature >= 0, go to left when
// x[feature] < threshold, else right; the leaf value is added to base_score.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "imcnas/dataset.hpp"
#include "imcnas/gbdt.hpp"
#include "imcnas/kendall.hpp"

namespace imcnas::surrogate {

struct SurrogateParams {
  double margin = 0.1;
  gbdt::Params gbdt{};
  int pairs_per_anchor = 32;
  int fine_tune_rounds = 50;

  void check() const;
  nlohmann::json to_json() const;
  static SurrogateParams from_json(const nlohmann::json& j);
};

/// Loss of one ordered pair where the first item has the higher label.
double hinge_pair_loss(double p_better, double p_worse, double margin) noexcept;
/// Mean hinge loss over all ordered pairs with distinct labels; 0 when none.
double pairwise_hinge_loss(std::span<const double> scores, std::span<const double> labels, double margin);

struct Prediction {
  double score = 0.0;
  double avm = 0.0;
  double std = 0.0;
};

struct Predictions {
  std::vector<double> scores;
  std::vector<double> avm;
  std::vector<double> std;
};

struct FineTuneReport {
  double tau_before = 0.0;
  double tau_after = 0.0;
  int attempts = 0;
  bool accepted = false;
};

class SurrogateEnsemble {
 public:
  /// Throws TrainError with fewer than two rows or constant accuracy labels.
  static SurrogateEnsemble train(const Dataset& ds, const SurrogateParams& params = {});

  /// Throws SchemaError when the vector does not match the feature schema.
  Prediction predict(std::span<const double> features) const;
  Predictions predict(const gbdt::FeatureMatrix& x) const;
  Predictions predict(const std::vector<Architecture>& archs, const RpuConfig& rpu) const;

  /// Extra rounds on retained rows plus new_rows. If Kendall tau on new_rows
  /// would drop, retries with the new rows up-weighted and finally returns
  /// the current model unchanged.
  SurrogateEnsemble fine_tune(const Dataset& new_rows, FineTuneReport* report = nullptr) const;

  nlohmann::json to_json() const;
  static SurrogateEnsemble from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static SurrogateEnsemble load(const std::string& path);

  const SurrogateParams& params() const noexcept { return params_; }
  const std::vector<std::string>& feature_schema() const noexcept { return schema_; }
  std::size_t retained_rows() const noexcept { return retained_.size(); }
  const gbdt::Booster& ranker() const noexcept { return ranker_; }

 private:
  struct Retained {
    std::string key;
    std::vector<double> x;
    double acc = 0.0;
    double avm = 0.0;
    double std = 0.0;
  };

  void fit(const std::vector<Retained>& rows, std::span<const double> weights, int rounds);

  SurrogateParams params_;
  std::vector<std::string> schema_;
  gbdt::Booster ranker_, avm_, std_;
  std::vector<Retained> retained_;
};

struct ModelMetrics {
  double kendall_tau = 0.0;
  double avm_rmse = 0.0;
  double std_rmse = 0.0;
  double avm_label_std = 0.0;  // RMSE of the constant mean predictor
  double std_label_std = 0.0;
  std::size_t rows = 0;
};

ModelMetrics evaluate_model(const SurrogateEnsemble& model, const Dataset& held_out);

}  // namespace imcnas::surrogate
