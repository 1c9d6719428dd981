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

#include "imcnas/mutation.hpp"

#include <algorithm>
#include <cassert>
#include <vector>

#include "imcnas/lhs.hpp"

namespace imcnas::arch {

namespace {

class Mutator {
 public:
  Mutator(const MutationOptions& opts, Rng& rng) : opts_(opts), space_(opts.space), rng_(rng) {}

  MutationReport apply(Architecture& a) {
    MutationReport rep;
    rep.depth = coin(opts_.probs.depth);
    rep.width = coin(opts_.probs.width);
    rep.other = coin(opts_.probs.other);
    if (rep.depth) depth_mutation(a);
    if (rep.width) width_mutation(a);
    if (rep.other) other_mutation(a);
    return rep;
  }

 private:
  bool coin(double p) { return p > 0.0 && std::bernoulli_distribution(std::min(1.0, p))(rng_); }

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  MainBlockSpec& random_block(Architecture& a) { return a.blocks[static_cast<std::size_t>(pick(static_cast<int>(a.blocks.size())))]; }

  // +-1 within `range`, reflecting at the bounds. Steps that reach the top of
  // a growth dimension pass an extra coin flip.
  int step(int value, IntRange range, bool growth_dim) {
    if (range.size() <= 1) return value;
    int dir = coin(0.5) ? 1 : -1;
    if (!range.contains(value + dir)) dir = -dir;
    const int next = std::clamp(value + dir, range.lo, range.hi);
    if (growth_dim && next == range.hi && next > value && !coin(opts_.growth_to_max_prob)) return value;
    return next;
  }

  void depth_mutation(Architecture& a) {
    switch (pick(3)) {
      case 0: {  // add or remove a main block
        const int m = static_cast<int>(a.blocks.size());
        const int next = step(m, space_.m, true);
        if (next > m) {
          MainBlockSpec blk = a.blocks.back();
          blk.st = false;
          a.blocks.push_back(blk);
        } else if (next < m) {
          a.blocks.pop_back();
        }
        break;
      }
      case 1: {
        auto& blk = random_block(a);
        blk.r = step(blk.r, space_.r, true);
        break;
      }
      default: {
        auto& blk = random_block(a);
        std::vector<ConvType> others;
        for (ConvType ct : space_.ct)
          if (ct != blk.ct) others.push_back(ct);
        if (!others.empty()) blk.ct = others[static_cast<std::size_t>(pick(static_cast<int>(others.size())))];
        break;
      }
    }
  }

  void width_mutation(Architecture& a) {
    switch (pick(3)) {
      case 0: {
        auto& blk = random_block(a);
        blk.wf = step(blk.wf, space_.wf, true);
        break;
      }
      case 1: {
        auto& blk = random_block(a);
        blk.b = step(blk.b, space_.b, false);
        break;
      }
      default: {
        if (space_.oc0.size() <= 1) break;
        const int max_shift = std::max(1, space_.oc0.size() / 8);
        const int shift = 1 + pick(max_shift);
        int next = a.oc0 + (coin(0.5) ? shift : -shift);
        if (!space_.oc0.contains(next)) next = a.oc0 + (next > a.oc0 ? -shift : shift);
        a.oc0 = std::clamp(next, space_.oc0.lo, space_.oc0.hi);
        break;
      }
    }
  }

  void other_mutation(Architecture& a) {
    const int kinds = space_.allow_skip_toggle ? 2 : 1;
    if (pick(kinds) == 0) {
      std::vector<int> others;
      for (int k : space_.ks0)
        if (k != a.ks0) others.push_back(k);
      if (!others.empty()) a.ks0 = others[static_cast<std::size_t>(pick(static_cast<int>(others.size())))];
    } else {
      auto& blk = random_block(a);
      blk.st = !blk.st;
    }
  }

  const MutationOptions& opts_;
  const SearchSpace& space_;
  Rng& rng_;
};

}  // namespace

Mutant mutate_with_report(const Architecture& parent, const MutationOptions& opts, Rng& rng) {
  validate(parent, opts.space);
  Mutator mutator(opts, rng);
  auto over = [&](const Architecture& a) {
    return opts.t_p && param_count(a, opts.input, opts.num_classes) >= *opts.t_p;
  };

  Mutant child{parent, {}};
  child.report = mutator.apply(child.arch);
  int retries = 0;
  while (over(child.arch) && retries < opts.max_retries) {
    ++retries;
    child.arch = parent;
    child.report = mutator.apply(child.arch);
  }
  child.report.retries = retries;
  if (over(child.arch)) {
    child.arch = shrink_to_budget(std::move(child.arch), *opts.t_p, opts.space, opts.input, opts.num_classes);
    child.report.shrunk = true;
  }
  assert(is_valid(child.arch, opts.space));
  return child;
}

Architecture mutate(const Architecture& parent, const MutationProbs& probs, std::optional<std::int64_t> t_p, Rng& rng) {
  MutationOptions opts;
  opts.probs = probs;
  opts.t_p = t_p;
  return mutate_with_report(parent, opts, rng).arch;
}

}  // namespace imcnas::arch
