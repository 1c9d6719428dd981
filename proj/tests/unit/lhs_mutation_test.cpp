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

#include <algorithm>
#include <cmath>

#include "imcnas/lhs.hpp"
#include "imcnas/mutation.hpp"

namespace imcnas::arch {
namespace {

// Stratum of `level` when K levels are cut into n integer ranges, found by
// scanning the boundaries directly.
int stratum_by_scan(int level, int K, int n) {
  for (int j = 0; j < n; ++j) {
    const long lo = static_cast<long>(j) * K / n;
    const long hi = static_cast<long>(j + 1) * K / n;
    if (level >= lo && level < hi) return j;
  }
  return -1;
}

int realized_level(const Architecture& a, const SearchSpace& s, std::size_t d) {
  if (d == 0) return a.oc0 - s.oc0.lo;
  if (d == 1) return static_cast<int>(std::find(s.ks0.begin(), s.ks0.end(), a.ks0) - s.ks0.begin());
  if (d == 2) return static_cast<int>(a.blocks.size()) - s.m.lo;
  const auto& blk = a.blocks[(d - 3) / 4];
  switch ((d - 3) % 4) {
    case 0: return blk.r - s.r.lo;
    case 1: return blk.b - s.b.lo;
    case 2: return static_cast<int>(std::find(s.ct.begin(), s.ct.end(), blk.ct) - s.ct.begin());
    default: return blk.wf - s.wf.lo;
  }
}

bool present(const Architecture& a, std::size_t d) { return d < 3 || (d - 3) / 4 < a.blocks.size(); }

TEST(Lhs, DimensionsCoverEverySearchableSlot) {
  const auto dims = lhs_dimensions({});
  ASSERT_EQ(dims.size(), 3u + 4u * 5u);
  EXPECT_EQ(dims[0].name, "oc0");
  EXPECT_EQ(dims[0].levels, 121);
  EXPECT_EQ(dims[1].levels, 4);
  EXPECT_EQ(dims[3].name, "block0.r");
  EXPECT_EQ(dims[3].levels, 16);
}

TEST(Lhs, EveryStratumHoldsOneSample) {
  const SearchSpace space;
  const auto dims = lhs_dimensions(space);
  for (std::size_t n : {4u, 16u, 200u}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto cells = sample_lhs_cells(n, seed, space);
      ASSERT_EQ(cells.size(), n);
      for (std::size_t d = 0; d < dims.size(); ++d) {
        std::vector<int> design_hits(n, 0), level_hits(n, 0);
        for (const auto& c : cells) {
          const int j = static_cast<int>(std::floor(c.design[d] * static_cast<double>(n)));
          ASSERT_GE(j, 0);
          ASSERT_LT(j, static_cast<int>(n));
          ++design_hits[static_cast<std::size_t>(j)];
          EXPECT_EQ(j, c.strata[d]);
          if (!present(c.arch, d)) continue;
          const int level = realized_level(c.arch, space, d);
          const int K = dims[d].levels;
          if (K >= static_cast<int>(n)) {
            const int s = stratum_by_scan(level, K, static_cast<int>(n));
            EXPECT_EQ(s, c.strata[d]) << dims[d].name << " n=" << n << " seed=" << seed;
            EXPECT_EQ(lhs_stratum_of_level(level, K, n), s);
          } else {
            EXPECT_EQ(level, std::min(K - 1, static_cast<int>(std::floor(c.design[d] * K))));
          }
        }
        for (int h : design_hits) EXPECT_EQ(h, 1) << dims[d].name << " n=" << n << " seed=" << seed;
      }
    }
  }
}

TEST(Lhs, SamplesAreValidAndDeterministic) {
  const auto a = sample_lhs(50, 3);
  const auto b = sample_lhs(50, 3);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, sample_lhs(50, 4));
  for (const auto& x : a) EXPECT_TRUE(is_valid(x));
  EXPECT_THROW(sample_lhs(0, 1), Error);
}

TEST(Lhs, ParameterBudgetIsRespected) {
  for (std::int64_t t_p : {100'000, 500'000}) {
    for (const auto& a : sample_lhs(100, 11, t_p)) EXPECT_LT(param_count(a), t_p);
  }
}

TEST(Lhs, ResampleKeepsTheCell) {
  const SearchSpace space;
  const auto cells = sample_lhs_cells(16, 5, space);
  Rng rng(9);
  for (const auto& c : cells) {
    const auto r = resample_in_cell(c, 16, space, rng);
    EXPECT_EQ(r.strata, c.strata);
    for (std::size_t d = 0; d < c.design.size(); ++d)
      EXPECT_EQ(static_cast<int>(std::floor(r.design[d] * 16.0)), c.strata[d]);
    EXPECT_TRUE(is_valid(r.arch));
  }
}

TEST(Lhs, ShrinkReachesBudgetOrMinimum) {
  const Architecture big{128, 7, {{16, 12, ConvType::B, 4}, {16, 12, ConvType::D, 4}}};
  const auto s = shrink_to_budget(big, 200'000);
  EXPECT_TRUE(is_valid(s));
  EXPECT_LT(param_count(s), 200'000);
  const auto tiny = shrink_to_budget(big, 1);
  EXPECT_TRUE(is_valid(tiny));
  EXPECT_EQ(shrink_to_budget(tiny, 1), tiny);
}

TEST(Lhs, LevelMappingBoundaries) {
  EXPECT_EQ(lhs_level(0, 0.0, 121, 4), 0);
  EXPECT_EQ(lhs_level(3, 0.999999, 121, 4), 120);
  EXPECT_EQ(lhs_level(199, 0.999999, 4, 200), 3);
  EXPECT_EQ(lhs_level(0, 0.0, 4, 200), 0);
}

struct Shape {
  int oc0, ks0;
  std::vector<std::tuple<int, ConvType>> depth_part;  // r, ct
  std::vector<std::tuple<int, int>> width_part;       // b, wf
  std::vector<bool> st;
};

Shape shape_of(const Architecture& a) {
  Shape s{a.oc0, a.ks0, {}, {}, {}};
  for (const auto& b : a.blocks) {
    s.depth_part.emplace_back(b.r, b.ct);
    s.width_part.emplace_back(b.b, b.wf);
    s.st.push_back(b.st);
  }
  return s;
}

TEST(Mutation, ClassesTouchOnlyTheirGenes) {
  const auto parents = sample_lhs(40, 21);
  Rng rng(1);
  for (const auto& p : parents) {
    const Shape ps = shape_of(p);
    {
      MutationOptions o;
      o.probs = {0.0, 1.0, 0.0};
      const auto m = mutate_with_report(p, o, rng);
      EXPECT_TRUE(m.report.width && !m.report.depth && !m.report.other);
      const Shape ms = shape_of(m.arch);
      EXPECT_EQ(ms.depth_part, ps.depth_part);
      EXPECT_EQ(ms.ks0, ps.ks0);
      EXPECT_EQ(ms.st, ps.st);
    }
    {
      MutationOptions o;
      o.probs = {0.0, 0.0, 1.0};
      const auto m = mutate_with_report(p, o, rng);
      const Shape ms = shape_of(m.arch);
      EXPECT_EQ(ms.oc0, ps.oc0);
      EXPECT_EQ(ms.depth_part, ps.depth_part);
      EXPECT_EQ(ms.width_part, ps.width_part);
    }
    {
      MutationOptions o;
      o.probs = {1.0, 0.0, 0.0};
      const auto m = mutate_with_report(p, o, rng);
      EXPECT_EQ(m.arch.oc0, p.oc0);
      EXPECT_EQ(m.arch.ks0, p.ks0);
    }
  }
}

TEST(Mutation, ZeroProbabilitiesKeepParent) {
  Rng rng(2);
  const auto p = published("cifar10/AnalogNAS_T300");
  EXPECT_EQ(mutate(p, {0.0, 0.0, 0.0}, std::nullopt, rng), p);
}

TEST(Mutation, ChildrenAreValidAndUnderBudget) {
  Rng rng(3);
  const std::int64_t t_p = 300'000;
  for (const auto& p : sample_lhs(100, 8, t_p)) {
    MutationOptions o;
    o.probs = {1.0, 1.0, 1.0};
    o.t_p = t_p;
    const auto m = mutate_with_report(p, o, rng);
    EXPECT_TRUE(is_valid(m.arch));
    EXPECT_LT(param_count(m.arch), t_p);
    EXPECT_LE(m.report.retries, o.max_retries);
  }
}

TEST(Mutation, SeededStreamsAreReproducible) {
  const auto p = published("vww/AnalogNAS_T200");
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng a(s), b(s);
    EXPECT_EQ(mutate(p, {}, 500'000, a), mutate(p, {}, 500'000, b));
  }
}

TEST(Mutation, GrowthToMaxCanBeSuppressed) {
  SearchSpace space;
  space.wf = {1, 2};
  space.m = {1, 1};
  space.r = {1, 1};
  space.b = {1, 1};
  MutationOptions o;
  o.space = space;
  o.probs = {0.0, 1.0, 0.0};
  o.growth_to_max_prob = 0.0;
  Rng rng(4);
  const Architecture p{16, 3, {{1, 1, ConvType::B, 1}}};
  for (int i = 0; i < 200; ++i) EXPECT_EQ(mutate_with_report(p, o, rng).arch.blocks[0].wf, 1);
}

TEST(Mutation, RejectsInvalidParent) {
  Rng rng(5);
  const Architecture bad{3, 3, {{1, 1, ConvType::B, 1}}};
  EXPECT_THROW(mutate(bad, {}, std::nullopt, rng), InvalidArchitecture);
}

}  // namespace
}  // namespace imcnas::arch
