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

// Second-order gradient boosting over regression trees.
//
// Trees are grown level by level with exact greedy splits on presorted feature
// columns. A split on feature f at threshold v sends rows with x[f] < v left.
// With G, H the gradient and hessian sums of a node and lambda the L2 penalty,
// the split gain is GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l) and a leaf holds
// -eta * G / (H + l).

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "imcnas/common.hpp"

namespace imcnas::gbdt {

/// rows x features, one sample per row.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Params {
  int rounds = 300;
  int max_depth = 6;
  double learning_rate = 0.1;
  double subsample = 0.8;  // row fraction per tree
  double lambda = 1.0;
  double min_child_hessian = 1.0;
  std::uint64_t seed = 0;

  void check() const;
  nlohmann::json to_json() const;
  static Params from_json(const nlohmann::json& j);
};

struct Node {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<Node> nodes;  // nodes[0] is the root
  double predict(std::span<const double> x) const noexcept;
};

/// Fills g and h (one entry per row) for the current predictions.
using GradientFn = std::function<void(std::span<const double> preds, std::span<double> g, std::span<double> h, Rng& rng)>;

class Booster {
 public:
  Booster() = default;
  Booster(int num_features, double base_score) : num_features_(num_features), base_score_(base_score) {}

  /// Adds `rounds` trees fitted to the gradients of `grad` on x. Row weights,
  /// when non-empty, scale each row's gradient and hessian.
  void boost(const FeatureMatrix& x, const GradientFn& grad, int rounds, const Params& params,
             std::span<const double> row_weights = {});

  double predict(std::span<const double> x) const;
  std::vector<double> predict(const FeatureMatrix& x) const;

  int num_features() const noexcept { return num_features_; }
  double base_score() const noexcept { return base_score_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }

  /// {"base_score", "num_features", "trees": [{"feature":[], "threshold":[],
  ///   "left":[], "right":[], "value":[]}]}
  nlohmann::json to_json() const;
  static Booster from_json(const nlohmann::json& j);

 private:
  int num_features_ = 0;
  double base_score_ = 0.0;
  std::vector<Tree> trees_;
};

/// Fits one tree to (g, h) over the rows with in_sample[i] set.
Tree fit_tree(const FeatureMatrix& x, const std::vector<std::vector<int>>& sorted_rows, std::span<const double> g,
              std::span<const double> h, const std::vector<char>& in_sample, const Params& params);

/// Per-feature row order by ascending value.
std::vector<std::vector<int>> presort(const FeatureMatrix& x);

}  // namespace imcnas::gbdt
