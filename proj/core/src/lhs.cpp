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

#include "imcnas/lhs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace imcnas::arch {

namespace {

constexpr std::size_t kStemDims = 3;
constexpr std::size_t kBlockDims = 4;

Architecture realize(const std::vector<int>& levels, const SearchSpace& space) {
  Architecture arch;
  arch.oc0 = space.oc0.lo + levels[0];
  arch.ks0 = space.ks0[static_cast<std::size_t>(levels[1])];
  const int m = space.m.lo + levels[2];
  for (int i = 0; i < m; ++i) {
    const std::size_t base = kStemDims + kBlockDims * static_cast<std::size_t>(i);
    MainBlockSpec blk;
    blk.r = space.r.lo + levels[base + 0];
    blk.b = space.b.lo + levels[base + 1];
    blk.ct = space.ct[static_cast<std::size_t>(levels[base + 2])];
    blk.wf = space.wf.lo + levels[base + 3];
    arch.blocks.push_back(blk);
  }
  return arch;
}

void fill_from_design(LhsSample& s, std::size_t n, const std::vector<LhsDimension>& dims, const SearchSpace& space,
                      Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> levels(dims.size());
  s.design.resize(dims.size());
  for (std::size_t d = 0; d < dims.size(); ++d) {
    const double u = unit(rng);
    s.design[d] = (s.strata[d] + u) / static_cast<double>(n);
    levels[d] = lhs_level(s.strata[d], u, dims[d].levels, n);
  }
  s.arch = realize(levels, space);
  s.shrunk = false;
}

bool over_budget(const Architecture& arch, const LhsOptions& opts) {
  return opts.t_p && param_count(arch, opts.input, opts.num_classes) >= *opts.t_p;
}

}  // namespace

std::vector<LhsDimension> lhs_dimensions(const SearchSpace& space) {
  std::vector<LhsDimension> dims = {
      {"oc0", space.oc0.size()},
      {"ks0", static_cast<int>(space.ks0.size())},
      {"m", space.m.size()},
  };
  for (int i = 0; i < space.m.hi; ++i) {
    const std::string p = "block" + std::to_string(i) + ".";
    dims.push_back({p + "r", space.r.size()});
    dims.push_back({p + "b", space.b.size()});
    dims.push_back({p + "ct", static_cast<int>(space.ct.size())});
    dims.push_back({p + "wf", space.wf.size()});
  }
  return dims;
}

int lhs_level(int j, double u, int levels, std::size_t n) {
  const auto K = static_cast<std::int64_t>(levels);
  const auto N = static_cast<std::int64_t>(n);
  if (K >= N) {
    const std::int64_t lo = j * K / N;
    const std::int64_t hi = (j + 1) * K / N;
    const auto off = static_cast<std::int64_t>(std::floor(u * static_cast<double>(hi - lo)));
    return static_cast<int>(std::min(lo + off, hi - 1));
  }
  const double x = (j + u) / static_cast<double>(N);
  return static_cast<int>(std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(x * K)), K - 1));
}

int lhs_stratum_of_level(int level, int levels, std::size_t n) {
  const auto K = static_cast<std::int64_t>(levels);
  const auto N = static_cast<std::int64_t>(n);
  // Largest j with floor(jK/N) <= level.
  std::int64_t j = ((level + 1) * N - 1) / K;
  while (j > 0 && j * K / N > level) --j;
  while (j + 1 < N && (j + 1) * K / N <= level) ++j;
  return static_cast<int>(j);
}

std::vector<LhsSample> sample_lhs_cells(std::size_t n, std::uint64_t seed, const SearchSpace& space,
                                        const LhsOptions& opts) {
  if (n == 0) throw Error("sample_lhs: n must be at least 1");
  space.check();
  const auto dims = lhs_dimensions(space);
  Rng perm_rng(derive_seed(seed, {0x1a5}));

  std::vector<LhsSample> samples(n);
  for (auto& s : samples) s.strata.resize(dims.size());
  std::vector<int> perm(n);
  for (std::size_t d = 0; d < dims.size(); ++d) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), perm_rng);
    for (std::size_t i = 0; i < n; ++i) samples[i].strata[d] = perm[i];
  }

  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, {0xce11, i}));
    auto& s = samples[i];
    fill_from_design(s, n, dims, space, rng);
    for (int attempt = 0; attempt < opts.max_retries && over_budget(s.arch, opts); ++attempt) {
      fill_from_design(s, n, dims, space, rng);
    }
    if (over_budget(s.arch, opts)) {
      s.arch = shrink_to_budget(s.arch, *opts.t_p, space, opts.input, opts.num_classes);
      s.shrunk = true;
    }
  }
  return samples;
}

std::vector<Architecture> sample_lhs(std::size_t n, std::uint64_t seed, std::optional<std::int64_t> t_p,
                                     const SearchSpace& space) {
  LhsOptions opts;
  opts.t_p = t_p;
  auto cells = sample_lhs_cells(n, seed, space, opts);
  std::vector<Architecture> out;
  out.reserve(n);
  for (auto& c : cells) out.push_back(std::move(c.arch));
  return out;
}

LhsSample resample_in_cell(const LhsSample& cell, std::size_t n, const SearchSpace& space, Rng& rng) {
  LhsSample s;
  s.strata = cell.strata;
  fill_from_design(s, n, lhs_dimensions(space), space, rng);
  return s;
}

Architecture shrink_to_budget(Architecture arch, std::int64_t t_p, const SearchSpace& space, const InputShape& input,
                              int num_classes) {
  auto over = [&] { return param_count(arch, input, num_classes) >= t_p; };
  while (over()) {
    bool changed = false;
    for (auto& blk : arch.blocks) {
      if (blk.wf > space.wf.lo) blk.wf -= 1, changed = true;
    }
    if (changed) continue;
    for (auto& blk : arch.blocks) {
      if (blk.b > space.b.lo) blk.b = std::max(space.b.lo, blk.b / 2), changed = true;
    }
    if (changed) continue;
    for (auto& blk : arch.blocks) {
      if (blk.r > space.r.lo) blk.r = std::max(space.r.lo, blk.r / 2), changed = true;
    }
    if (changed) continue;
    if (static_cast<int>(arch.blocks.size()) > space.m.lo) {
      arch.blocks.pop_back();
      continue;
    }
    if (arch.oc0 > space.oc0.lo) {
      arch.oc0 = std::max(space.oc0.lo, arch.oc0 / 2);
      continue;
    }
    int smaller_ks = -1;
    for (int k : space.ks0) {
      if (k < arch.ks0 && k > smaller_ks) smaller_ks = k;
    }
    if (smaller_ks > 0) {
      arch.ks0 = smaller_ks;
      continue;
    }
    break;  // minimal architecture still over budget
  }
  return arch;
}

}  // namespace imcnas::arch
