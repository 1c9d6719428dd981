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

#include "imcnas_cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "imcnas/arch_json.hpp"

namespace imcnas::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("--out", "cannot write " + path);
  return os;
}

void write_json(const std::string& path, const json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

void require_file(const std::string& flag, const std::string& path) {
  if (path.empty()) throw ConfigError(flag, "is required");
  if (!fs::is_regular_file(path)) throw ConfigError(flag, "cannot read " + path);
}

std::string require_out(const std::string& out) {
  if (out.empty()) throw ConfigError("--out", "is required");
  return out;
}

/// Path with the final ".json" (if any) replaced by `suffix`.
std::string sibling(const std::string& path, const std::string& suffix) {
  std::string stem = path;
  if (stem.size() > 5 && stem.compare(stem.size() - 5, 5, ".json") == 0) stem.resize(stem.size() - 5);
  return stem + suffix;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(precision) << v;
  return ss.str();
}

std::string blocks_text(const arch::Architecture& a) {
  std::string s;
  for (const auto& b : a.blocks) {
    if (!s.empty()) s += " ";
    s += "(" + std::to_string(b.r) + "," + std::to_string(b.b) + "," + arch::to_char(b.ct) + "," + std::to_string(b.wf) +
         (b.st ? ",st" : "") + ")";
  }
  return s;
}

void print_arch_table(std::ostream& log, const std::string& label, const search::SearchResult& r) {
  log << "| network | OC0 | KS0 | M | blocks (R,B,CT,WF) | params | depth | acc 1d | std | AVM |\n";
  log << "|---|---|---|---|---|---|---|---|---|---|\n";
  log << "| " << label << " | " << r.best.oc0 << " | " << r.best.ks0 << " | " << r.best.blocks.size() << " | "
      << blocks_text(r.best) << " | " << arch::param_count(r.best) << " | " << arch::depth(r.best) << " | "
      << fmt(r.best_record.acc_1day_mean) << " | " << fmt(r.best_record.acc_1day_std) << " | "
      << fmt(r.best_record.avm) << " |\n";
}

std::string number_text(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

}  // namespace

void cmd_gen_dataset(const EngineConfig& cfg, const std::string& out_arg, std::ostream& log) {
  const std::string out = require_out(out_arg);
  cfg.check();
  const auto backend = cfg.make_backend();
  surrogate::BuildOptions opts;
  opts.space = cfg.space;
  opts.t_p = cfg.dataset_t_p;
  opts.n_trials = cfg.n_trials;
  opts.workers = cfg.workers;
  surrogate::BuildReport rep;
  const auto ds = surrogate::build_dataset(cfg.n_lhs, *backend, cfg.rpu_grid(), cfg.seed, opts, &rep);
  {
    auto os = open_out(out);
    ds.write_ndjson(os);
  }

  const auto acc = ds.acc_1day();
  const auto avm = ds.avm();
  json summary = {{"rows", ds.size()}, {"dropped", rep.dropped}};
  if (!acc.empty()) {
    const auto [amin, amax] = std::minmax_element(acc.begin(), acc.end());
    double am = 0.0, vm = 0.0;
    for (double a : acc) am += a;
    for (double v : avm) vm += v;
    am /= static_cast<double>(acc.size());
    vm /= static_cast<double>(avm.size());
    summary["acc_1day"] = {{"mean", am}, {"min", *amin}, {"max", *amax}};
    summary["avm_mean"] = vm;
    log << "rows=" << ds.size() << " dropped=" << rep.dropped << " acc_1day mean=" << fmt(am) << " min=" << fmt(*amin)
        << " max=" << fmt(*amax) << " avm mean=" << fmt(vm) << "\n";
  } else {
    log << "rows=0 dropped=" << rep.dropped << "\n";
  }
  write_json(out + ".meta.json", {{"schema_version", kSchemaVersion}, {"config", cfg.echo()}, {"summary", summary}});
}

void cmd_train_surrogate(const EngineConfig& cfg, const std::string& dataset_path, const std::string& model_out,
                         std::ostream& log) {
  require_file("--dataset", dataset_path);
  const std::string out = require_out(model_out);
  cfg.check();
  surrogate::Dataset ds;
  try {
    ds = surrogate::Dataset::load(dataset_path);
  } catch (const SchemaError& e) {
    throw ConfigError("--dataset", e.what());
  }
  if (ds.size() < 2) throw TrainError("dataset has " + std::to_string(ds.size()) + " rows; at least two are needed");
  auto [train, held_out] = ds.split(cfg.train_fraction, cfg.seed);
  const auto model = surrogate::SurrogateEnsemble::train(train, cfg.surrogate);

  json metrics = {{"train_rows", train.size()}, {"held_out_rows", held_out.size()}};
  if (held_out.size() >= 2) {
    const auto m = surrogate::evaluate_model(model, held_out);
    metrics["kendall_tau"] = m.kendall_tau;
    metrics["avm_rmse"] = m.avm_rmse;
    metrics["std_rmse"] = m.std_rmse;
    metrics["avm_label_std"] = m.avm_label_std;
    metrics["std_label_std"] = m.std_label_std;
    log << "held-out kendall_tau=" << fmt(m.kendall_tau) << " avm_rmse=" << fmt(m.avm_rmse, 5)
        << " std_rmse=" << fmt(m.std_rmse, 5) << " (rows: " << train.size() << " train, " << held_out.size()
        << " held out)\n";
  } else {
    log << "held-out split has fewer than two rows; metrics skipped\n";
  }
  json j = model.to_json();
  j["config"] = cfg.echo();
  j["metrics"] = metrics;
  auto os = open_out(out);
  os << j.dump() << '\n';
}

void cmd_search(const EngineConfig& cfg, const std::string& model_path, const std::string& out_arg,
                const std::vector<double>& sweep_t_avm, std::ostream& log) {
  require_file("--model", model_path);
  const std::string out = require_out(out_arg);
  cfg.check();
  surrogate::SurrogateEnsemble model;
  try {
    model = surrogate::SurrogateEnsemble::load(model_path);
  } catch (const SchemaError& e) {
    throw ConfigError("--model", e.what());
  }
  const auto backend = cfg.make_backend();

  auto one = [&](double t_avm, const std::string& path) {
    EngineConfig c = cfg;
    c.search.t_avm = t_avm;
    const auto scfg = c.search_config();
    search::SurrogateFitness fitness(model);
    const auto res = search::run(scfg, fitness, *backend);
    const std::string harvested = sibling(path, ".harvested.ndjson");
    {
      auto os = open_out(harvested);
      res.harvested.write_ndjson(os);
    }
    json j = res.to_json(scfg, fs::path(harvested).filename().string());
    j["config"] = c.echo();
    write_json(path, j);
    print_arch_table(log, "best (t_avm=" + number_text(t_avm) + ")", res);
    log << "feasible: params " << arch::param_count(res.best) << (scfg.t_p ? " < " + std::to_string(*scfg.t_p) : "")
        << ", measured AVM " << fmt(res.best_record.avm) << " vs t_avm " << number_text(t_avm)
        << (res.verified_feasible ? " (verified)" : " (NOT verified)") << "\n";
    log << "generations: " << res.generations << ", wall time: " << fmt(res.wall_seconds, 2) << " s\n";
    return res;
  };

  if (sweep_t_avm.empty()) {
    one(cfg.search.t_avm, out);
    return;
  }

  std::ostringstream csv;
  csv << "t_avm,best_id,best_arch,params,depth,acc_1day_mean,acc_1day_std,avm,verified,generations,wall_seconds\n";
  bool any_infeasible = false;
  std::string infeasible_msg;
  for (double t : sweep_t_avm) {
    const std::string path = sibling(out, ".tavm-" + number_text(t) + ".json");
    try {
      const auto r = one(t, path);
      csv << number_text(t) << "," << arch::arch_id(r.best) << "," << arch::canonical_string(r.best) << ","
          << arch::param_count(r.best) << "," << arch::depth(r.best) << "," << r.best_record.acc_1day_mean << ","
          << r.best_record.acc_1day_std << "," << r.best_record.avm << "," << (r.verified_feasible ? 1 : 0) << ","
          << r.generations << "," << r.wall_seconds << "\n";
    } catch (const InfeasibleSearch& e) {
      any_infeasible = true;
      infeasible_msg = e.what();
      csv << number_text(t) << ",,,,,,,,0,,\n";
      log << "t_avm=" << number_text(t) << ": " << e.what() << "\n";
    }
  }
  auto os = open_out(sibling(out, ".sweep.csv"));
  os << csv.str();
  if (any_infeasible) throw InfeasibleSearch(infeasible_msg);
}

void cmd_evaluate(const EngineConfig& cfg, const std::vector<std::string>& archs, const std::string& out_arg,
                  std::ostream& log) {
  if (archs.empty()) throw ConfigError("--arch", "at least one architecture is required");
  const std::string out = require_out(out_arg);
  cfg.check();
  const auto backend = cfg.make_backend();

  json records = json::array();
  std::ostringstream csv;
  csv << "name,arch_id,time_s,acc_mean,acc_std,n_trials\n";
  for (const auto& spec : archs) {
    arch::Architecture a;
    static const std::string kPublished = "published:";
    if (spec.rfind(kPublished, 0) == 0) {
      try {
        a = arch::published(spec.substr(kPublished.size()));
      } catch (const Error& e) {
        throw ConfigError("--arch", e.what());
      }
    } else {
      require_file("--arch", spec);
      std::ifstream is(spec);
      json j;
      try {
        j = json::parse(is);
      } catch (const json::exception& e) {
        throw ConfigError("--arch", spec + ": " + e.what());
      }
      a = arch::architecture_from_json(j, cfg.space);
    }
    const auto rec = eval::evaluate(a, cfg.rpu, *backend, cfg.n_trials, cfg.seed);
    json rj = eval::to_json(rec);
    rj["name"] = spec;
    rj["arch"] = arch::to_json(a);
    records.push_back(std::move(rj));

    const std::size_t n = rec.acc.size();
    log << spec << " [" << rec.arch_id << "]";
    for (std::size_t t = 0; t < rec.times.size(); ++t) {
      double mean = 0.0;
      for (const auto& row : rec.acc) mean += row[t];
      mean /= static_cast<double>(n);
      double ss = 0.0;
      for (const auto& row : rec.acc) ss += (row[t] - mean) * (row[t] - mean);
      const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
      csv << spec << "," << rec.arch_id << "," << rec.times[t] << "," << mean << "," << sd << "," << n << "\n";
      log << " t=" << rec.times[t] << "s:" << fmt(mean);
    }
    log << " avm=" << fmt(rec.avm) << "\n";
  }
  write_json(out, {{"schema_version", kSchemaVersion}, {"config", cfg.echo()}, {"records", std::move(records)}});
  auto os = open_out(sibling(out, ".csv"));
  os << csv.str();
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"imcnas: constrained architecture search for analog in-memory accelerators"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out_path;
  app.add_option("--config", config_path, "Configuration file");
  app.add_option("--set", sets, "Override, section.key=value (repeatable)");
  app.add_option("--seed", seed, "Root seed (run.seed)");
  app.add_option("--workers", workers, "Worker threads; never changes results");
  app.add_option("--out", out_path, "Output path");

  auto* gen = app.add_subcommand("gen-dataset", "Sample, evaluate and write a dataset (NDJSON)");

  std::string dataset_path;
  auto* train = app.add_subcommand("train-surrogate", "Train the ranking and regression models");
  train->add_option("--dataset", dataset_path, "Dataset file from gen-dataset")->required();

  std::string model_path;
  std::vector<double> sweep;
  auto* srch = app.add_subcommand("search", "Run the constrained evolutionary search");
  srch->add_option("--model", model_path, "Model file from train-surrogate")->required();
  srch->add_option("--sweep-t-avm", sweep, "Comma-separated AVM thresholds")->delimiter(',');

  std::vector<std::string> arch_specs;
  auto* evl = app.add_subcommand("evaluate", "Evaluate architectures with the ground-truth backend");
  evl->add_option("--arch", arch_specs, "Architecture JSON file or published:<task>/<name> (repeatable)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    EngineConfig cfg;
    if (!config_path.empty()) apply_ini_file(cfg, config_path);
    apply_env(cfg, process_env());
    for (const auto& s : sets) apply_override(cfg, s);
    if (seed) cfg.seed = *seed;
    if (workers) cfg.workers = std::max<std::size_t>(1, *workers);
    if (!out_path.empty()) cfg.out = out_path;

    if (gen->parsed()) {
      cmd_gen_dataset(cfg, cfg.out, out);
    } else if (train->parsed()) {
      cmd_train_surrogate(cfg, dataset_path, cfg.out, out);
    } else if (srch->parsed()) {
      cmd_search(cfg, model_path, cfg.out, sweep, out);
    } else if (evl->parsed()) {
      cmd_evaluate(cfg, arch_specs, cfg.out, out);
    }
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArchitecture& e) {
    err << "invalid architecture: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidGenome& e) {
    err << "invalid genome: " << e.what() << "\n";
    return kConfigError;
  } catch (const SchemaError& e) {
    err << "input error: " << e.what() << "\n";
    return kConfigError;
  } catch (const TrainError& e) {
    err << "training error: " << e.what() << "\n";
    return kTrainError;
  } catch (const InfeasibleSearch& e) {
    err << "infeasible search: " << e.what() << "\n";
    return kInfeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace imcnas::cli
