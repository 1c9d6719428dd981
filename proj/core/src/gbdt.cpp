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

#include "imcnas/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace imcnas::gbdt {

using nlohmann::json;

void Params::check() const {
  if (rounds < 1) throw ConfigError("surrogate.rounds", "must be >= 1");
  if (max_depth < 1 || max_depth > 16) throw ConfigError("surrogate.max_depth", "must be in [1, 16]");
  if (!(learning_rate > 0.0)) throw ConfigError("surrogate.learning_rate", "must be > 0");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw ConfigError("surrogate.subsample", "must be in (0, 1]");
  if (!(lambda >= 0.0)) throw ConfigError("surrogate.lambda", "must be >= 0");
  if (!(min_child_hessian >= 0.0)) throw ConfigError("surrogate.min_child_hessian", "must be >= 0");
}

json Params::to_json() const {
  return {{"rounds", rounds},     {"max_depth", max_depth}, {"learning_rate", learning_rate},
          {"subsample", subsample}, {"lambda", lambda},     {"min_child_hessian", min_child_hessian},
          {"seed", seed}};
}

Params Params::from_json(const json& j) {
  Params p;
  p.rounds = j.at("rounds").get<int>();
  p.max_depth = j.at("max_depth").get<int>();
  p.learning_rate = j.at("learning_rate").get<double>();
  p.subsample = j.at("subsample").get<double>();
  p.lambda = j.at("lambda").get<double>();
  p.min_child_hessian = j.at("min_child_hessian").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

double Tree::predict(std::span<const double> x) const noexcept {
  int i = 0;
  while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const Node& n = nodes[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

std::vector<std::vector<int>> presort(const FeatureMatrix& x) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto& idx = out[static_cast<std::size_t>(f)];
    idx.resize(static_cast<std::size_t>(x.rows()));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return x(a, f) < x(b, f); });
  }
  return out;
}

namespace {

struct Candidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  double gl = 0.0, hl = 0.0;
};

inline double score(double g, double h, double lambda) { return g * g / (h + lambda); }

}  // namespace

Tree fit_tree(const FeatureMatrix& x, const std::vector<std::vector<int>>& sorted_rows, std::span<const double> g,
              std::span<const double> h, const std::vector<char>& in_sample, const Params& params) {
  const auto n = static_cast<std::size_t>(x.rows());
  Tree tree;
  std::vector<int> node_of(n, -1);
  double g0 = 0.0, h0 = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (!in_sample[r]) continue;
    node_of[r] = 0;
    g0 += g[r];
    h0 += h[r];
  }
  tree.nodes.push_back({});
  std::vector<double> node_g{g0}, node_h{h0};
  std::vector<int> frontier{0};

  for (int level = 0; level < params.max_depth && !frontier.empty(); ++level) {
    std::vector<int> slot_of(tree.nodes.size(), -1);
    for (std::size_t s = 0; s < frontier.size(); ++s) slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
    const std::size_t k = frontier.size();
    std::vector<Candidate> best(k);

    std::vector<double> gl(k), hl(k), last(k);
    std::vector<char> seen(k);
    for (std::size_t f = 0; f < sorted_rows.size(); ++f) {
      std::fill(gl.begin(), gl.end(), 0.0);
      std::fill(hl.begin(), hl.end(), 0.0);
      std::fill(seen.begin(), seen.end(), 0);
      for (int r : sorted_rows[f]) {
        const int node = node_of[static_cast<std::size_t>(r)];
        if (node < 0) continue;
        const int s = slot_of[static_cast<std::size_t>(node)];
        if (s < 0) continue;
        const auto su = static_cast<std::size_t>(s);
        const double v = x(r, static_cast<Eigen::Index>(f));
        if (seen[su] && v > last[su]) {
          const double G = node_g[static_cast<std::size_t>(node)], H = node_h[static_cast<std::size_t>(node)];
          const double gr = G - gl[su], hr = H - hl[su];
          if (hl[su] >= params.min_child_hessian && hr >= params.min_child_hessian) {
            const double gain =
                score(gl[su], hl[su], params.lambda) + score(gr, hr, params.lambda) - score(G, H, params.lambda);
            if (gain > best[su].gain) {
              double thr = 0.5 * (last[su] + v);
              if (!(thr > last[su])) thr = v;
              best[su] = {gain, static_cast<int>(f), thr, gl[su], hl[su]};
            }
          }
        }
        gl[su] += g[static_cast<std::size_t>(r)];
        hl[su] += h[static_cast<std::size_t>(r)];
        last[su] = v;
        seen[su] = 1;
      }
    }

    std::vector<int> next;
    for (std::size_t s = 0; s < k; ++s) {
      if (best[s].feature < 0 || best[s].gain <= 1e-12) continue;
      const int id = frontier[s];
      const auto left = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      Node& parent = tree.nodes[static_cast<std::size_t>(id)];
      parent.feature = best[s].feature;
      parent.threshold = best[s].threshold;
      parent.left = left;
      parent.right = left + 1;
      const double G = node_g[static_cast<std::size_t>(id)], H = node_h[static_cast<std::size_t>(id)];
      node_g.push_back(best[s].gl);
      node_h.push_back(best[s].hl);
      node_g.push_back(G - best[s].gl);
      node_h.push_back(H - best[s].hl);
      next.push_back(left);
      next.push_back(left + 1);
    }
    if (next.empty()) break;
    for (std::size_t r = 0; r < n; ++r) {
      const int node = node_of[r];
      if (node < 0) continue;
      const Node& nd = tree.nodes[static_cast<std::size_t>(node)];
      if (nd.feature < 0) continue;
      node_of[r] = x(static_cast<Eigen::Index>(r), nd.feature) < nd.threshold ? nd.left : nd.right;
    }
    frontier = std::move(next);
  }

  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    Node& nd = tree.nodes[i];
    if (nd.feature < 0) nd.value = -params.learning_rate * node_g[i] / (node_h[i] + params.lambda);
  }
  return tree;
}

void Booster::boost(const FeatureMatrix& x, const GradientFn& grad, int rounds, const Params& params,
                    std::span<const double> row_weights) {
  params.check();
  if (x.cols() != num_features_) throw ShapeError("boost: feature count differs from the model");
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0) throw TrainError("boost: no rows");
  if (!row_weights.empty() && row_weights.size() != n) throw ShapeError("boost: row weight count differs from rows");

  const auto sorted = presort(x);
  std::vector<double> preds = predict(x);
  std::vector<double> g(n), h(n);
  std::vector<int> order(n);
  std::vector<char> in_sample(n);
  const auto take = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(params.subsample * static_cast<double>(n))));

  for (int round = 0; round < rounds; ++round) {
    Rng rng(derive_seed(params.seed, {static_cast<std::uint64_t>(trees_.size())}));
    grad(preds, g, h, rng);
    if (!row_weights.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        g[i] *= row_weights[i];
        h[i] *= row_weights[i];
      }
    }
    std::fill(in_sample.begin(), in_sample.end(), take >= n ? 1 : 0);
    if (take < n) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i = 0; i < take; ++i) in_sample[static_cast<std::size_t>(order[i])] = 1;
    }
    Tree tree = fit_tree(x, sorted, g, h, in_sample, params);
    for (std::size_t i = 0; i < n; ++i) {
      preds[i] += tree.predict(std::span<const double>(x.row(static_cast<Eigen::Index>(i)).data(), x.cols()));
    }
    trees_.push_back(std::move(tree));
  }
}

double Booster::predict(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(num_features_)) throw SchemaError("predict: feature count differs from the model");
  double s = base_score_;
  for (const auto& t : trees_) s += t.predict(x);
  return s;
}

std::vector<double> Booster::predict(const FeatureMatrix& x) const {
  std::vector<double> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    out[static_cast<std::size_t>(i)] = predict(std::span<const double>(x.row(i).data(), static_cast<std::size_t>(x.cols())));
  return out;
}

json Booster::to_json() const {
  json trees = json::array();
  for (const auto& t : trees_) {
    std::vector<int> feature, left, right;
    std::vector<double> threshold, value;
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}});
  }
  return {{"base_score", base_score_}, {"num_features", num_features_}, {"trees", std::move(trees)}};
}

Booster Booster::from_json(const json& j) {
  Booster b(j.at("num_features").get<int>(), j.at("base_score").get<double>());
  for (const auto& jt : j.at("trees")) {
    const auto feature = jt.at("feature").get<std::vector<int>>();
    const auto threshold = jt.at("threshold").get<std::vector<double>>();
    const auto left = jt.at("left").get<std::vector<int>>();
    const auto right = jt.at("right").get<std::vector<int>>();
    const auto value = jt.at("value").get<std::vector<double>>();
    const std::size_t m = feature.size();
    if (m == 0 || threshold.size() != m || left.size() != m || right.size() != m || value.size() != m)
      throw SchemaError("tree arrays have inconsistent lengths");
    Tree t;
    t.nodes.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      Node& n = t.nodes[i];
      n = {feature[i], threshold[i], left[i], right[i], value[i]};
      if (n.feature >= b.num_features_) throw SchemaError("tree feature index out of range");
      if (n.feature >= 0) {
        const auto in_range = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(m); };
        if (!in_range(n.left) || !in_range(n.right)) throw SchemaError("tree child index out of range");
      }
    }
    b.trees_.push_back(std::move(t));
  }
  return b;
}

}  // namespace imcnas::gbdt
