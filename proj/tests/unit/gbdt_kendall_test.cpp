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

#include <gtest/gtest.h>

#include <cmath>

#include "imcnas/gbdt.hpp"
#include "imcnas/kendall.hpp"

namespace imcnas {
namespace {

using gbdt::Booster;
using gbdt::FeatureMatrix;
using gbdt::Params;

// O(n^2) tau-b written from the definition.
double tau_b_reference(const std::vector<double>& x, const std::vector<double>& y) {
  double c = 0, d = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double a = x[i] - x[j], b = y[i] - y[j];
      if (a == 0 && b == 0) continue;
      if (a == 0) {
        ++tx;
      } else if (b == 0) {
        ++ty;
      } else if ((a > 0) == (b > 0)) {
        ++c;
      } else {
        ++d;
      }
    }
  }
  const double denom = std::sqrt((c + d + tx) * (c + d + ty));
  return denom == 0 ? 0.0 : (c - d) / denom;
}

TEST(Kendall, OneAdjacentSwapOfFour) {
  const std::vector<double> s{1, 2, 3, 4}, l{1, 2, 4, 3};
  EXPECT_NEAR(surrogate::kendall_tau(s, l), 4.0 / 6.0, 1e-12);
}

TEST(Kendall, Extremes) {
  const std::vector<double> s{1, 2, 3, 4, 5}, r{5, 4, 3, 2, 1}, c{2, 2, 2, 2, 2};
  EXPECT_DOUBLE_EQ(surrogate::kendall_tau(s, s), 1.0);
  EXPECT_DOUBLE_EQ(surrogate::kendall_tau(s, r), -1.0);
  EXPECT_DOUBLE_EQ(surrogate::kendall_tau(s, c), 0.0);
}

TEST(Kendall, MatchesPublishedValues) {
  // Reference values from scipy.stats.kendalltau.
  const std::vector<double> v1{17, 86, 60, 77, 47, 3, 70, 87, 88, 92};
  const std::vector<double> v2{70, 29, 85, 61, 80, 34, 60, 31, 73, 66};
  EXPECT_NEAR(surrogate::kendall_tau(v1, v2), -0.06666666666666667, 1e-12);
  const std::vector<double> v1t{17, 86, 60, 77, 47, 3, 70, 47, 88, 92};
  EXPECT_NEAR(surrogate::kendall_tau(v1t, v2), 0.04494665749754947, 1e-12);
}

TEST(Kendall, AgreesWithDefinitionOnRandomTies) {
  Rng rng(3);
  std::uniform_int_distribution<int> d(0, 6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(30), y(30);
    for (auto& v : x) v = d(rng);
    for (auto& v : y) v = d(rng);
    EXPECT_NEAR(surrogate::kendall_tau(x, y), tau_b_reference(x, y), 1e-12);
  }
}

TEST(Kendall, Errors) {
  const std::vector<double> a{1, 2}, b{1}, e;
  EXPECT_THROW(surrogate::kendall_tau(a, b), ShapeError);
  EXPECT_THROW(surrogate::kendall_tau(b, b), ShapeError);
  EXPECT_THROW(surrogate::kendall_tau(e, e), ShapeError);
}

gbdt::GradientFn squared_loss(std::vector<double> y) {
  return [y = std::move(y)](std::span<const double> p, std::span<double> g, std::span<double> h, Rng&) {
    for (std::size_t i = 0; i < y.size(); ++i) {
      g[i] = p[i] - y[i];
      h[i] = 1.0;
    }
  };
}

Params exact_params() {
  Params p;
  p.rounds = 1;
  p.max_depth = 1;
  p.learning_rate = 1.0;
  p.subsample = 1.0;
  p.lambda = 0.0;
  p.min_child_hessian = 0.0;
  return p;
}

TEST(Gbdt, SingleSplitByHand) {
  FeatureMatrix x(4, 1);
  x << 0, 1, 2, 3;
  Booster b(1, 0.0);
  b.boost(x, squared_loss({0, 0, 1, 1}), 1, exact_params());
  ASSERT_EQ(b.trees().size(), 1u);
  const auto& root = b.trees()[0].nodes[0];
  EXPECT_EQ(root.feature, 0);
  EXPECT_DOUBLE_EQ(root.threshold, 1.5);
  const auto pred = b.predict(x);
  EXPECT_NEAR(pred[0], 0.0, 1e-12);
  EXPECT_NEAR(pred[3], 1.0, 1e-12);
  // x == threshold goes right.
  const double at_thr[] = {1.5};
  EXPECT_NEAR(b.predict(at_thr), 1.0, 1e-12);
}

TEST(Gbdt, LeafValueUsesShrinkageAndL2) {
  FeatureMatrix x(4, 1);
  x << 0, 1, 2, 3;
  Params p = exact_params();
  p.learning_rate = 0.5;
  p.lambda = 1.0;
  Booster b(1, 0.0);
  b.boost(x, squared_loss({0, 0, 1, 1}), 1, p);
  // Right leaf: G = -2, H = 2 -> -0.5 * -2 / (2 + 1).
  EXPECT_NEAR(b.predict(x)[3], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(b.predict(x)[0], 0.0, 1e-12);
}

TEST(Gbdt, BoostingReducesTrainingError) {
  Rng rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 300;
  FeatureMatrix x(n, 3);
  std::vector<double> y(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) x(i, k) = u(rng);
    y[static_cast<std::size_t>(i)] = std::sin(3 * x(i, 0)) + x(i, 1) * x(i, 2);
  }
  auto mse = [&](const Booster& b) {
    const auto p = b.predict(x);
    double s = 0;
    for (int i = 0; i < n; ++i) s += std::pow(p[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(i)], 2);
    return s / n;
  };
  Params p;
  p.seed = 5;
  Booster b(3, 0.0);
  const double before = mse(b);
  b.boost(x, squared_loss(y), 100, p);
  EXPECT_LT(mse(b), 0.05 * before);
}

TEST(Gbdt, DeterministicAndSerializable) {
  Rng rng(6);
  std::normal_distribution<double> g(0, 1);
  FeatureMatrix x(80, 4);
  std::vector<double> y(80);
  for (int i = 0; i < 80; ++i) {
    for (int k = 0; k < 4; ++k) x(i, k) = g(rng);
    y[static_cast<std::size_t>(i)] = x(i, 0) > 0 ? 1.0 : -1.0;
  }
  Params p;
  p.seed = 9;
  Booster a(4, 0.25), b(4, 0.25);
  a.boost(x, squared_loss(y), 20, p);
  b.boost(x, squared_loss(y), 20, p);
  EXPECT_EQ(a.predict(x), b.predict(x));
  const Booster c = Booster::from_json(nlohmann::json::parse(a.to_json().dump()));
  EXPECT_EQ(c.predict(x), a.predict(x));
  EXPECT_EQ(c.base_score(), 0.25);
}

TEST(Gbdt, ErrorPaths) {
  Booster b(2, 0.0);
  FeatureMatrix x(3, 3);
  x.setZero();
  EXPECT_THROW(b.boost(x, squared_loss({0, 0, 0}), 1, {}), ShapeError);
  const double one[] = {1.0};
  EXPECT_THROW(b.predict(one), SchemaError);
  Params p;
  p.max_depth = 0;
  EXPECT_THROW(p.check(), ConfigError);
  p = {};
  p.subsample = 0.0;
  EXPECT_THROW(p.check(), ConfigError);
  auto j = b.to_json();
  j["trees"] = {{{"feature", {0}}, {"threshold", {0.0}}, {"left", {5}}, {"right", {6}}, {"value", {0.0}}}};
  EXPECT_THROW(Booster::from_json(j), SchemaError);
}

TEST(Gbdt, PresortIsStable) {
  FeatureMatrix x(5, 1);
  x << 2, 1, 2, 0, 1;
  const auto s = gbdt::presort(x);
  EXPECT_EQ(s[0], (std::vector<int>{3, 1, 4, 0, 2}));
}

TEST(Gbdt, ParamsJsonRoundTrip) {
  Params p;
  p.rounds = 7;
  p.seed = 123;
  const auto q = Params::from_json(p.to_json());
  EXPECT_EQ(q.rounds, 7);
  EXPECT_EQ(q.seed, 123u);
  EXPECT_EQ(q.max_depth, p.max_depth);
}

}  // namespace
}  // namespace imcnas
