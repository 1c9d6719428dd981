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

#include <iosfwd>
#include <string>
#include <vector>

#include "imcnas_cli/config.hpp"

namespace imcnas::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kTrainError = 3,
  kInfeasible = 4,
};

/// Writes `out` (NDJSON) and `out`.meta.json (config echo and summary).
void cmd_gen_dataset(const EngineConfig& cfg, const std::string& out, std::ostream& log);

/// Trains on a seeded split, prints held-out metrics and writes the model
/// with the config echo and metrics embedded.
void cmd_train_surrogate(const EngineConfig& cfg, const std::string& dataset_path, const std::string& model_out,
                         std::ostream& log);

/// One search; writes `out` and the harvested rows next to it. With a sweep
/// list, one result per threshold plus `out`.sweep.csv.
void cmd_search(const EngineConfig& cfg, const std::string& model_path, const std::string& out,
                const std::vector<double>& sweep_t_avm, std::ostream& log);

/// Evaluates each architecture (JSON file path, or "published:<task>/<name>")
/// and writes `out` (JSON) and `out`.csv with per-time means and stds.
void cmd_evaluate(const EngineConfig& cfg, const std::vector<std::string>& archs, const std::string& out,
                  std::ostream& log);

/// Full command line entry point; maps error families onto exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace imcnas::cli
