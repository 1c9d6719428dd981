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

#include "imcnas/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "imcnas/arch_json.hpp"

namespace imcnas::search {

using nlohmann::json;

void SearchConfig::check() const {
  if (population_size < 2 || population_size % 2 != 0)
    throw ConfigError("search.population_size", "must be even and >= 2");
  if (n_iterations < 0) throw ConfigError("search.n_iterations", "must be >= 0");
  if (time_budget && !(*time_budget > 0.0)) throw ConfigError("search.time_budget", "must be > 0");
  if (t_p && *t_p <= 0) throw ConfigError("search.t_p", "must be > 0");
  if (!(t_avm > 0.0)) throw ConfigError("search.t_avm", "must be > 0");
  for (double p : {mutation_probs.depth, mutation_probs.width, mutation_probs.other}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("search.mutation_probs", "must be in [0, 1]");
  }
  if (growth_to_max_prob && !(*growth_to_max_prob >= 0.0 && *growth_to_max_prob <= 1.0))
    throw ConfigError("search.growth_to_max_prob", "must be in [0, 1]");
  if (surrogate_check_interval < 0) throw ConfigError("search.surrogate_check_interval", "must be >= 0");
  if (!(tau_floor > -1.0 && tau_floor <= 1.0)) throw ConfigError("search.tau_floor", "must be in (-1, 1]");
  if (max_cull_retries < 0) throw ConfigError("search.max_cull_retries", "must be >= 0");
  if (verify_top_k < 1) throw ConfigError("search.verify_top_k", "must be >= 1");
  if (n_trials < 1) throw ConfigError("search.n_trials", "must be >= 1");
  space.check();
  rpu.check();
}

double SearchConfig::effective_growth_prob() const noexcept {
  if (growth_to_max_prob) return *growth_to_max_prob;
  return t_p && *t_p <= 200'000 ? 0.2 : 1.0;
}

namespace {

json space_to_json(const arch::SearchSpace& s) {
  std::string ct;
  for (auto c : s.ct) ct.push_back(arch::to_char(c));
  return {{"oc0", {s.oc0.lo, s.oc0.hi}}, {"ks0", s.ks0},       {"m", {s.m.lo, s.m.hi}},
          {"r", {s.r.lo, s.r.hi}},       {"b", {s.b.lo, s.b.hi}}, {"ct", ct},
          {"wf", {s.wf.lo, s.wf.hi}},    {"allow_skip_toggle", s.allow_skip_toggle}};
}

json prediction_to_json(const Prediction& p) { return {{"score", p.score}, {"avm", p.avm}, {"std", p.std}}; }

eval::EvalRecord ground_truth(const Architecture& a, const SearchConfig& cfg, const eval::Backend& backend) {
  return eval::evaluate(a, cfg.rpu, backend, cfg.n_trials, cfg.eval_seed);
}

std::int64_t params_of(const Architecture& a) { return arch::param_count(a); }

bool within_budget(std::int64_t params, const SearchConfig& cfg) { return !cfg.t_p || params < *cfg.t_p; }

void fill_stats(const Population& pop, const SearchConfig& cfg, GenerationStats& st) {
  st.best_score = -std::numeric_limits<double>::infinity();
  double score = 0.0, d = 0.0, wf = 0.0, br = 0.0, oc = 0.0;
  st.infeasible = 0;
  for (const auto& ind : pop) {
    st.best_score = std::max(st.best_score, ind.pred.score);
    score += ind.pred.score;
    d += arch::depth(ind.arch);
    wf += arch::mean_widening_factor(ind.arch);
    br += arch::mean_branches(ind.arch);
    oc += ind.arch.oc0;
    if (!predicted_feasible(ind, cfg)) ++st.infeasible;
  }
  const auto n = static_cast<double>(pop.size());
  st.mean_score = score / n;
  st.mean_depth = d / n;
  st.mean_wf = wf / n;
  st.mean_branches = br / n;
  st.mean_oc0 = oc / n;
}

}  // namespace

json SearchConfig::to_json() const {
  json j = {{"population_size", population_size},
            {"n_iterations", n_iterations},
            {"time_budget", time_budget ? json(*time_budget) : json(nullptr)},
            {"t_p", t_p ? json(*t_p) : json(nullptr)},
            {"t_avm", t_avm},
            {"mutation_probs", {{"depth", mutation_probs.depth}, {"width", mutation_probs.width}, {"other", mutation_probs.other}}},
            {"growth_to_max_prob", effective_growth_prob()},
            {"surrogate_check_interval", surrogate_check_interval},
            {"tau_floor", tau_floor},
            {"max_cull_retries", max_cull_retries},
            {"verify_top_k", verify_top_k},
            {"n_trials", n_trials},
            {"seed", seed},
            {"eval_seed", eval_seed},
            {"space", space_to_json(space)},
            {"rpu", eval::rpu_to_json(rpu)}};
  return j;
}

bool FitnessModel::fine_tune(const surrogate::Dataset&, surrogate::FineTuneReport*) { return false; }

Prediction SurrogateFitness::predict(const Architecture& a, const RpuConfig& rpu) const {
  return model_.predict(surrogate::featurize(a, rpu));
}

bool SurrogateFitness::fine_tune(const surrogate::Dataset& rows, surrogate::FineTuneReport* report) {
  surrogate::FineTuneReport rep;
  model_ = model_.fine_tune(rows, &rep);
  if (report) *report = rep;
  return rep.accepted;
}

Prediction OracleFitness::predict(const Architecture& a, const RpuConfig& rpu) const {
  const auto rec = eval::evaluate(a, rpu, backend_, n_trials_, eval_seed_);
  return {eval::objective(rec), rec.avm, rec.acc_1day_std};
}

bool predicted_feasible(const Individual& ind, const SearchConfig& cfg) noexcept {
  return ind.pred.avm < cfg.t_avm && within_budget(ind.params, cfg);
}

json GenerationStats::to_json() const {
  json j = {{"generation", generation},
            {"best_score", best_score},
            {"mean_score", mean_score},
            {"infeasible", infeasible},
            {"cull_resamples", cull_resamples},
            {"mutations", {{"depth", depth_mutations}, {"width", width_mutations}, {"other", other_mutations},
                           {"retries", mutation_retries}}},
            {"mean_depth", mean_depth},
            {"mean_wf", mean_wf},
            {"mean_branches", mean_branches},
            {"mean_oc0", mean_oc0}};
  if (checkpoint) j["checkpoint"] = {{"kendall_tau", checkpoint_tau}, {"fine_tuned", fine_tuned}};
  return j;
}

Population ranked(const Population& pop, const SearchConfig& cfg) {
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  for (std::size_t i = 0; i < pop.size(); ++i) keyed.emplace_back(arch::arch_hash(pop[i].arch), i);
  std::stable_sort(keyed.begin(), keyed.end(), [&](const auto& x, const auto& y) {
    const Individual& a = pop[x.second];
    const Individual& b = pop[y.second];
    const bool fa = predicted_feasible(a, cfg), fb = predicted_feasible(b, cfg);
    if (fa != fb) return fa;
    if (a.pred.score != b.pred.score) return a.pred.score > b.pred.score;
    return x.first < y.first;
  });
  Population out;
  out.reserve(pop.size());
  for (const auto& k : keyed) out.push_back(pop[k.second]);
  return out;
}

Population init_population(const SearchConfig& cfg, const FitnessModel& model, GenerationStats* stats) {
  cfg.check();
  const std::size_t n = cfg.population_size;
  arch::LhsOptions lhs_opts;
  lhs_opts.t_p = cfg.t_p;
  const auto cells = arch::sample_lhs_cells(n, derive_seed(cfg.seed, {0x1a5e}), cfg.space, lhs_opts);

  Population pop(n);
  std::vector<int> resamples(n, 0);
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    Individual ind;
    ind.cell = cells[i];
    ind.arch = cells[i].arch;
    ind.params = params_of(ind.arch);
    ind.pred = model.predict(ind.arch, cfg.rpu);
    Rng rng(derive_seed(cfg.seed, {0xc011, i}));
    for (int k = 0; k < cfg.max_cull_retries && ind.pred.avm >= cfg.t_avm; ++k) {
      ++resamples[i];
      auto cell = arch::resample_in_cell(cells[i], n, cfg.space, rng);
      if (cfg.t_p && params_of(cell.arch) >= *cfg.t_p) {
        cell.arch = arch::shrink_to_budget(cell.arch, *cfg.t_p, cfg.space);
        cell.shrunk = true;
      }
      ind.cell = cell;
      ind.arch = cell.arch;
      ind.params = params_of(ind.arch);
      ind.pred = model.predict(ind.arch, cfg.rpu);
    }
    ind.violation = !predicted_feasible(ind, cfg);
    pop[i] = std::move(ind);
  });

  if (stats) {
    *stats = {};
    for (int r : resamples) stats->cull_resamples += r;
    fill_stats(pop, cfg, *stats);
  }
  return pop;
}

Population step(const Population& pop, const FitnessModel& model, const SearchConfig& cfg, int generation,
                GenerationStats* stats) {
  if (pop.size() < 2 || pop.size() % 2 != 0) throw Error("step: population size must be even and >= 2");
  Population sorted = ranked(pop, cfg);
  const std::size_t half = sorted.size() / 2;
  sorted.resize(half);

  arch::MutationOptions mopts;
  mopts.probs = cfg.mutation_probs;
  mopts.t_p = cfg.t_p;
  mopts.space = cfg.space;
  mopts.growth_to_max_prob = cfg.effective_growth_prob();

  Population children(half);
  std::vector<arch::MutationReport> reports(half);
  std::vector<int> resamples(half, 0);
  parallel_for(half, cfg.workers, [&](std::size_t i) {
    const Individual& parent = sorted[i];
    Rng rng(derive_seed(cfg.seed, {0x57e9, static_cast<std::uint64_t>(generation), i}));
    Individual child;
    child.cell = parent.cell;
    auto m = arch::mutate_with_report(parent.arch, mopts, rng);
    child.arch = m.arch;
    reports[i] = m.report;
    child.params = params_of(child.arch);
    child.pred = model.predict(child.arch, cfg.rpu);
    for (int k = 0; k < cfg.max_cull_retries && child.pred.avm >= cfg.t_avm; ++k) {
      ++resamples[i];
      m = arch::mutate_with_report(parent.arch, mopts, rng);
      child.arch = m.arch;
      reports[i] = m.report;
      child.params = params_of(child.arch);
      child.pred = model.predict(child.arch, cfg.rpu);
    }
    child.violation = !predicted_feasible(child, cfg);
    children[i] = std::move(child);
  });

  Population next = std::move(sorted);
  for (auto& c : children) next.push_back(std::move(c));

  if (stats) {
    *stats = {};
    stats->generation = generation;
    for (std::size_t i = 0; i < half; ++i) {
      stats->depth_mutations += reports[i].depth ? 1 : 0;
      stats->width_mutations += reports[i].width ? 1 : 0;
      stats->other_mutations += reports[i].other ? 1 : 0;
      stats->mutation_retries += reports[i].retries;
      stats->cull_resamples += resamples[i];
    }
    fill_stats(next, cfg, *stats);
  }
  return next;
}

namespace {

struct Verified {
  std::size_t index;  // into the candidate list
  eval::EvalRecord record;
};

std::vector<std::size_t> unique_feasible(const Population& sorted, const SearchConfig& cfg) {
  std::vector<std::size_t> out;
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!predicted_feasible(sorted[i], cfg)) continue;
    if (seen.insert(arch::arch_hash(sorted[i].arch)).second) out.push_back(i);
  }
  return out;
}

// Prefers the higher objective, then the smaller architecture hash.
bool better(const eval::EvalRecord& a, std::uint64_t ha, const eval::EvalRecord& b, std::uint64_t hb) {
  const double oa = eval::objective(a), ob = eval::objective(b);
  if (oa != ob) return oa > ob;
  return ha < hb;
}

surrogate::DatasetRow harvest_row(const Architecture& a, const eval::EvalRecord& rec, const SearchConfig& cfg) {
  surrogate::DatasetRow row;
  row.arch = a;
  row.rpu = cfg.rpu;
  row.features = surrogate::featurize(a, cfg.rpu);
  row.record = rec;
  row.provenance = surrogate::Provenance::kSearchHarvested;
  return row;
}

}  // namespace

SearchResult run(const SearchConfig& cfg, FitnessModel& model, const eval::Backend& ground_truth_backend) {
  cfg.check();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  SearchResult res;
  GenerationStats st;
  Population pop = init_population(cfg, model, &st);
  bool ever_feasible = st.infeasible < static_cast<int>(pop.size());
  res.history.push_back(st);

  int gen = 0;
  while (gen < cfg.n_iterations && !(cfg.time_budget && elapsed() >= *cfg.time_budget)) {
    ++gen;
    pop = step(pop, model, cfg, gen, &st);
    if (cfg.surrogate_check_interval > 0 && gen % cfg.surrogate_check_interval == 0) {
      std::vector<std::size_t> idx;
      std::set<std::uint64_t> seen;
      for (std::size_t i = 0; i < pop.size(); ++i) {
        if (seen.insert(arch::arch_hash(pop[i].arch)).second) idx.push_back(i);
      }
      std::vector<eval::EvalRecord> recs(idx.size());
      parallel_for(idx.size(), cfg.workers,
                   [&](std::size_t k) { recs[k] = ground_truth(pop[idx[k]].arch, cfg, ground_truth_backend); });
      std::vector<double> scores, labels;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        scores.push_back(pop[idx[k]].pred.score);
        labels.push_back(recs[k].acc_1day_mean);
        res.harvested.add(harvest_row(pop[idx[k]].arch, recs[k], cfg));
      }
      st.checkpoint = true;
      st.checkpoint_tau = scores.size() >= 2 ? surrogate::kendall_tau(scores, labels) : 1.0;
      if (st.checkpoint_tau < cfg.tau_floor && model.can_fine_tune()) {
        st.fine_tuned = model.fine_tune(res.harvested, nullptr);
        if (st.fine_tuned) {
          parallel_for(pop.size(), cfg.workers, [&](std::size_t i) {
            pop[i].pred = model.predict(pop[i].arch, cfg.rpu);
            pop[i].violation = !predicted_feasible(pop[i], cfg);
          });
          fill_stats(pop, cfg, st);
        }
      }
    }
    ever_feasible = ever_feasible || st.infeasible < static_cast<int>(pop.size());
    res.history.push_back(st);
  }
  res.generations = gen;

  const Population sorted = ranked(pop, cfg);
  const auto candidates = unique_feasible(sorted, cfg);
  if (candidates.empty()) {
    int min_infeasible = static_cast<int>(pop.size());
    for (const auto& h : res.history) min_infeasible = std::min(min_infeasible, h.infeasible);
    throw InfeasibleSearch("no architecture satisfies params < t_p and predicted AVM < t_avm after " +
                           std::to_string(gen) + " generations (" + (ever_feasible ? "feasible individuals were lost" : "none ever feasible") +
                           "; fewest infeasible in a generation: " + std::to_string(min_infeasible) + " of " +
                           std::to_string(pop.size()) + ")");
  }

  std::optional<Verified> best;
  for (std::size_t start_k = 0; start_k < candidates.size() && !best; start_k += cfg.verify_top_k) {
    const std::size_t end_k = std::min(candidates.size(), start_k + cfg.verify_top_k);
    std::vector<eval::EvalRecord> recs(end_k - start_k);
    parallel_for(recs.size(), cfg.workers, [&](std::size_t k) {
      recs[k] = ground_truth(sorted[candidates[start_k + k]].arch, cfg, ground_truth_backend);
    });
    for (std::size_t k = 0; k < recs.size(); ++k) {
      const auto& ind = sorted[candidates[start_k + k]];
      res.harvested.add(harvest_row(ind.arch, recs[k], cfg));
      if (!(recs[k].avm < cfg.t_avm)) continue;
      if (!best || better(recs[k], arch::arch_hash(ind.arch), best->record,
                          arch::arch_hash(sorted[candidates[best->index]].arch)))
        best = Verified{start_k + k, recs[k]};
    }
  }

  if (best) {
    const auto& ind = sorted[candidates[best->index]];
    res.best = ind.arch;
    res.best_prediction = ind.pred;
    res.best_record = best->record;
    res.verified_feasible = true;
  } else {
    const auto& ind = sorted[candidates.front()];
    res.best = ind.arch;
    res.best_prediction = ind.pred;
    res.best_record = ground_truth(ind.arch, cfg, ground_truth_backend);
    res.verified_feasible = false;
  }
  res.wall_seconds = elapsed();
  return res;
}

json SearchResult::to_json(const SearchConfig& cfg, const std::string& harvested_path) const {
  json history_j = json::array();
  for (const auto& h : history) history_j.push_back(h.to_json());
  json harvested_j;
  if (harvested_path.empty()) {
    json rows = json::array();
    for (const auto& r : harvested.rows()) rows.push_back(surrogate::row_to_json(r));
    harvested_j = {{"rows", harvested.size()}, {"records", std::move(rows)}};
  } else {
    harvested_j = {{"rows", harvested.size()}, {"path", harvested_path}};
  }
  return {{"schema_version", kSchemaVersion},
          {"best", arch::to_json(best)},
          {"best_id", arch::arch_id(best)},
          {"best_params", arch::param_count(best)},
          {"best_depth", arch::depth(best)},
          {"best_prediction", prediction_to_json(best_prediction)},
          {"best_record", eval::to_json(best_record)},
          {"verified_feasible", verified_feasible},
          {"generations", generations},
          {"history", std::move(history_j)},
          {"harvested", std::move(harvested_j)},
          {"config", cfg.to_json()}};
}

std::size_t subspace_size(const arch::SearchSpace& space) {
  space.check();
  const double per_block = static_cast<double>(space.r.size()) * space.b.size() * static_cast<double>(space.ct.size()) *
                           space.wf.size() * (space.allow_skip_toggle ? 2.0 : 1.0);
  double total = 0.0;
  for (int m = space.m.lo; m <= space.m.hi; ++m) total += std::pow(per_block, m);
  total *= static_cast<double>(space.oc0.size()) * static_cast<double>(space.ks0.size());
  constexpr double kMax = static_cast<double>(std::numeric_limits<std::size_t>::max() / 2);
  return total >= kMax ? std::numeric_limits<std::size_t>::max() / 2 : static_cast<std::size_t>(total);
}

std::vector<Architecture> enumerate(const arch::SearchSpace& space, std::size_t cap) {
  const std::size_t size = subspace_size(space);
  if (size > cap)
    throw SubspaceTooLarge("sub-space holds " + std::to_string(size) + " architectures, cap is " + std::to_string(cap));

  std::vector<arch::MainBlockSpec> options;
  for (int r = space.r.lo; r <= space.r.hi; ++r)
    for (int b = space.b.lo; b <= space.b.hi; ++b)
      for (auto ct : space.ct)
        for (int wf = space.wf.lo; wf <= space.wf.hi; ++wf)
          for (int st = 0; st <= (space.allow_skip_toggle ? 1 : 0); ++st) options.push_back({r, b, ct, wf, st == 1});

  std::vector<Architecture> out;
  out.reserve(size);
  for (int oc0 = space.oc0.lo; oc0 <= space.oc0.hi; ++oc0) {
    for (int ks0 : space.ks0) {
      for (int m = space.m.lo; m <= space.m.hi; ++m) {
        std::vector<std::size_t> digit(static_cast<std::size_t>(m), 0);
        while (true) {
          Architecture a{oc0, ks0, {}};
          for (std::size_t d : digit) a.blocks.push_back(options[d]);
          out.push_back(std::move(a));
          std::size_t pos = 0;
          while (pos < digit.size() && ++digit[pos] == options.size()) digit[pos++] = 0;
          if (pos == digit.size()) break;
        }
      }
    }
  }
  return out;
}

namespace {

ExhaustiveResult select_best(const std::vector<Architecture>& archs, const eval::Backend& backend,
                             const SearchConfig& cfg) {
  std::vector<std::optional<eval::EvalRecord>> recs(archs.size());
  parallel_for(archs.size(), cfg.workers, [&](std::size_t i) {
    if (!within_budget(params_of(archs[i]), cfg)) return;
    recs[i] = ground_truth(archs[i], cfg, backend);
  });
  ExhaustiveResult res;
  res.enumerated = archs.size();
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < archs.size(); ++i) {
    if (!recs[i] || !(recs[i]->avm < cfg.t_avm)) continue;
    ++res.feasible;
    if (!best || better(*recs[i], arch::arch_hash(archs[i]), *recs[*best], arch::arch_hash(archs[*best]))) best = i;
  }
  if (!best) throw InfeasibleSearch("no enumerated architecture satisfies both constraints");
  res.best = archs[*best];
  res.record = *recs[*best];
  return res;
}

}  // namespace

ExhaustiveResult exhaustive(const arch::SearchSpace& space, const eval::Backend& backend, const SearchConfig& cfg,
                            std::size_t cap) {
  return select_best(enumerate(space, cap), backend, cfg);
}

ExhaustiveResult random_search(const SearchConfig& cfg, const eval::Backend& backend, std::size_t n_samples) {
  if (n_samples < 1) throw Error("random_search: n_samples must be >= 1");
  const auto& s = cfg.space;
  std::vector<Architecture> archs;
  std::set<std::uint64_t> seen;
  Rng rng(derive_seed(cfg.seed, {0x4a2d}));
  auto uniform = [&](const arch::IntRange& r) { return std::uniform_int_distribution<int>(r.lo, r.hi)(rng); };
  for (std::size_t i = 0; i < n_samples; ++i) {
    Architecture a;
    a.oc0 = uniform(s.oc0);
    a.ks0 = s.ks0[std::uniform_int_distribution<std::size_t>(0, s.ks0.size() - 1)(rng)];
    const int m = uniform(s.m);
    for (int k = 0; k < m; ++k) {
      arch::MainBlockSpec blk;
      blk.r = uniform(s.r);
      blk.b = uniform(s.b);
      blk.ct = s.ct[std::uniform_int_distribution<std::size_t>(0, s.ct.size() - 1)(rng)];
      blk.wf = uniform(s.wf);
      a.blocks.push_back(blk);
    }
    if (cfg.t_p && params_of(a) >= *cfg.t_p) a = arch::shrink_to_budget(a, *cfg.t_p, s);
    if (seen.insert(arch::arch_hash(a)).second) archs.push_back(std::move(a));
  }
  return select_best(archs, backend, cfg);
}

}  // namespace imcnas::search
