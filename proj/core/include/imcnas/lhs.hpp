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

// Latin hypercube sampling over the architecture space.
//
// Each searchable dimension (oc0, ks0, M, then r/b/ct/wf for every possible
// block) with K levels is split into n strata for n samples, and every stratum
// receives exactly one sample. With K >= n the strata are integer ranges
// [floor(jK/n), floor((j+1)K/n)); with K < n the continuous design point
// (j + u) / n is bucketed into K levels. Block dimensions beyond a sample's M
// are drawn but unused.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "imcnas/arch_space.hpp"

namespace imcnas::arch {

struct LhsDimension {
  std::string name;
  int levels = 1;
};

std::vector<LhsDimension> lhs_dimensions(const SearchSpace& space);

/// One Latin-hypercube cell and the architecture realized from it.
struct LhsSample {
  Architecture arch;
  std::vector<int> strata;     // per dimension, in [0, n)
  std::vector<double> design;  // per dimension, (stratum + u) / n in [0, 1)
  bool shrunk = false;         // parameter repair moved it out of its cell
};

struct LhsOptions {
  std::optional<std::int64_t> t_p;  // keep param_count < t_p
  InputShape input{};
  int num_classes = 10;
  int max_retries = 50;  // redraws inside the cell before shrinking
};

/// Level index for stratum `j` of `n` with in-stratum fraction `u` in [0, 1).
int lhs_level(int j, double u, int levels, std::size_t n);
/// Stratum of a level index; only meaningful when levels >= n.
int lhs_stratum_of_level(int level, int levels, std::size_t n);

std::vector<LhsSample> sample_lhs_cells(std::size_t n, std::uint64_t seed, const SearchSpace& space = {},
                                        const LhsOptions& opts = {});

std::vector<Architecture> sample_lhs(std::size_t n, std::uint64_t seed, std::optional<std::int64_t> t_p = std::nullopt,
                                     const SearchSpace& space = {});

/// Redraws the in-stratum fractions of `cell`, keeping every stratum.
LhsSample resample_in_cell(const LhsSample& cell, std::size_t n, const SearchSpace& space, Rng& rng);

/// Deterministically reduces widening, branches, depth and stem width until
/// param_count < t_p or the architecture is minimal.
Architecture shrink_to_budget(Architecture arch, std::int64_t t_p, const SearchSpace& space = {},
                              const InputShape& input = {}, int num_classes = 10);

}  // namespace imcnas::arch
