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

// Constrained evolutionary search.
//
// The population starts as a Latin-hypercube sample under the parameter
// budget. Individuals predicted to exceed the AVM threshold are redrawn inside
// their hypercube cell. Every generation keeps the better half, ordered by
// (feasible first, predicted score descending, architecture hash ascending),
// and refills the other half with one mutant per survivor. Every
// `surrogate_check_interval` generations the population is evaluated with the
// ground-truth backend and the surrogate is fine-tuned if Kendall tau falls
// below `tau_floor`. The final pick verifies the best predicted-feasible
// candidates with the ground-truth backend and returns the highest
// ACC / max(sigma, 1e-4) among those whose measured AVM is under threshold.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "imcnas/arch_space.hpp"
#include "imcnas/dataset.hpp"
#include "imcnas/evaluation.hpp"
#include "imcnas/lhs.hpp"
#include "imcnas/mutation.hpp"
#include "imcnas/surrogate.hpp"

namespace imcnas::search {

using arch::Architecture;
using sim::RpuConfig;
using surrogate::Prediction;

struct SearchConfig {
  std::size_t population_size = 200;
  int n_iterations = 200;
  std::optional<double> time_budget;  // seconds
  std::optional<std::int64_t> t_p;
  double t_avm = 0.10;
  arch::MutationProbs mutation_probs{};
  /// Probability of accepting a mutation that takes wf, r or M to its
  /// maximum. Unset means 0.2 when t_p <= 200,000 and 1.0 otherwise.
  std::optional<double> growth_to_max_prob;
  int surrogate_check_interval = 100;  // 0 disables checkpoints
  double tau_floor = 0.9;
  int max_cull_retries = 50;
  std::size_t verify_top_k = 10;
  int n_trials = 5;  // ground-truth trials per evaluation
  std::uint64_t seed = 0;
  std::uint64_t eval_seed = 0;  // ground-truth evaluation seed
  arch::SearchSpace space{};
  RpuConfig rpu{};
  /// Parallelism only; never changes results and is not echoed.
  std::size_t workers = 1;

  void check() const;
  double effective_growth_prob() const noexcept;
  nlohmann::json to_json() const;
};

/// Fitness source for selection: the trained surrogate, or any stand-in
/// such as the ground-truth oracle itself. predict must be thread-safe.
class FitnessModel {
 public:
  virtual ~FitnessModel() = default;
  virtual Prediction predict(const Architecture& arch, const RpuConfig& rpu) const = 0;
  virtual bool can_fine_tune() const { return false; }
  /// Refits on ground-truth rows; returns true if the model changed.
  virtual bool fine_tune(const surrogate::Dataset& rows, surrogate::FineTuneReport* report);
};

class SurrogateFitness final : public FitnessModel {
 public:
  explicit SurrogateFitness(surrogate::SurrogateEnsemble model) : model_(std::move(model)) {}
  Prediction predict(const Architecture& arch, const RpuConfig& rpu) const override;
  bool can_fine_tune() const override { return true; }
  bool fine_tune(const surrogate::Dataset& rows, surrogate::FineTuneReport* report) override;
  const surrogate::SurrogateEnsemble& model() const noexcept { return model_; }

 private:
  surrogate::SurrogateEnsemble model_;
};

/// Ground truth as fitness: score = ACC / max(sigma, 1e-4), true AVM and std.
class OracleFitness final : public FitnessModel {
 public:
  OracleFitness(const eval::Backend& backend, int n_trials, std::uint64_t eval_seed)
      : backend_(backend), n_trials_(n_trials), eval_seed_(eval_seed) {}
  Prediction predict(const Architecture& arch, const RpuConfig& rpu) const override;

 private:
  const eval::Backend& backend_;
  int n_trials_;
  std::uint64_t eval_seed_;
};

struct Individual {
  Architecture arch;
  arch::LhsSample cell;  // origin cell, for resampling
  Prediction pred;
  std::int64_t params = 0;
  bool violation = false;  // kept despite a failed constraint repair
};

bool predicted_feasible(const Individual& ind, const SearchConfig& cfg) noexcept;

struct GenerationStats {
  int generation = 0;
  double best_score = 0.0;
  double mean_score = 0.0;
  int infeasible = 0;       // individuals failing a constraint under prediction
  int cull_resamples = 0;   // redraws spent on AVM culling
  int depth_mutations = 0;
  int width_mutations = 0;
  int other_mutations = 0;
  int mutation_retries = 0;
  double mean_depth = 0.0;
  double mean_wf = 0.0;
  double mean_branches = 0.0;
  double mean_oc0 = 0.0;
  bool checkpoint = false;
  double checkpoint_tau = 0.0;
  bool fine_tuned = false;

  nlohmann::json to_json() const;
};

using Population = std::vector<Individual>;

Population init_population(const SearchConfig& cfg, const FitnessModel& model, GenerationStats* stats = nullptr);

/// One generation. `generation` (>= 1) seeds the mutation streams.
Population step(const Population& pop, const FitnessModel& model, const SearchConfig& cfg, int generation,
                GenerationStats* stats = nullptr);

/// Sorted copy: feasible first, then score descending, then hash ascending.
Population ranked(const Population& pop, const SearchConfig& cfg);

struct SearchResult {
  Architecture best;
  Prediction best_prediction;
  eval::EvalRecord best_record;     // ground truth
  bool verified_feasible = false;   // best_record.avm < t_avm and params < t_p
  int generations = 0;
  std::vector<GenerationStats> history;  // generation 0 is the initial population
  surrogate::Dataset harvested;
  double wall_seconds = 0.0;  // not serialized

  /// harvested_path, when given, is recorded instead of the rows.
  nlohmann::json to_json(const SearchConfig& cfg, const std::string& harvested_path = "") const;
};

/// Throws InfeasibleSearch if no individual ever satisfies both constraints.
SearchResult run(const SearchConfig& cfg, FitnessModel& model, const eval::Backend& ground_truth);

struct ExhaustiveResult {
  Architecture best;
  eval::EvalRecord record;
  std::size_t enumerated = 0;
  std::size_t feasible = 0;
};

std::size_t subspace_size(const arch::SearchSpace& space);
std::vector<Architecture> enumerate(const arch::SearchSpace& space, std::size_t cap = 10'000);

/// Argmax of ACC / max(sigma, 1e-4) over every architecture of `space` with
/// params < t_p and AVM < t_avm; ties go to the smaller architecture hash.
/// Evaluation seeds match run() for the same eval_seed. Throws
/// SubspaceTooLarge above `cap` and InfeasibleSearch if nothing qualifies.
ExhaustiveResult exhaustive(const arch::SearchSpace& space, const eval::Backend& backend, const SearchConfig& cfg,
                            std::size_t cap = 10'000);

/// Reference baseline: `n_samples` uniform draws under t_p, ground-truth
/// evaluated, same selection rule as exhaustive.
ExhaustiveResult random_search(const SearchConfig& cfg, const eval::Backend& backend, std::size_t n_samples);

}  // namespace imcnas::search
