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

#pragma once

#include <cstdint>
#include <optional>

#include "imcnas/arch_space.hpp"

namespace imcnas::arch {

/// Per-class trigger probabilities. Within a triggered class exactly one of
/// its mutations is applied, each with equal probability:
///   depth: add/remove a main block, +-1 residual block, change block type
///   width: +-1 widening factor, +-1 branch, shift oc0
///   other: change ks0, toggle a block's forced projection (st)
struct MutationProbs {
  double depth = 0.8;
  double width = 0.8;
  double other = 0.5;
};

struct MutationOptions {
  MutationProbs probs{};
  std::optional<std::int64_t> t_p;
  SearchSpace space{};
  InputShape input{};
  int num_classes = 10;
  /// Probability of accepting a step that takes wf, r or M to its maximum.
  double growth_to_max_prob = 1.0;
  int max_retries = 20;
};

struct MutationReport {
  bool depth = false;
  bool width = false;
  bool other = false;
  int retries = 0;
  bool shrunk = false;
};

struct Mutant {
  Architecture arch;
  MutationReport report;
};

Mutant mutate_with_report(const Architecture& parent, const MutationOptions& opts, Rng& rng);

Architecture mutate(const Architecture& parent, const MutationProbs& probs, std::optional<std::int64_t> t_p, Rng& rng);

}  // namespace imcnas::arch
