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

#include "imcnas/arch_json.hpp"

namespace imcnas::arch {

using nlohmann::json;

json to_json(const Architecture& arch) {
  json blocks = json::array();
  for (const auto& blk : arch.blocks) {
    blocks.push_back({{"r", blk.r}, {"b", blk.b}, {"ct", std::string(1, to_char(blk.ct))}, {"wf", blk.wf}, {"st", blk.st}});
  }
  return {{"schema_version", kSchemaVersion}, {"oc0", arch.oc0}, {"ks0", arch.ks0}, {"blocks", std::move(blocks)}};
}

Architecture architecture_from_json(const json& j, const SearchSpace& space) {
  Architecture arch;
  try {
    if (!j.is_object()) throw InvalidArchitecture("architecture must be a JSON object");
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion)
      throw InvalidArchitecture("unsupported schema_version " + j.at("schema_version").dump());
    for (const auto& [key, _] : j.items()) {
      if (key != "schema_version" && key != "oc0" && key != "ks0" && key != "blocks")
        throw InvalidArchitecture("unknown architecture key '" + key + "'");
    }
    arch.oc0 = j.at("oc0").get<int>();
    arch.ks0 = j.at("ks0").get<int>();
    for (const auto& b : j.at("blocks")) {
      MainBlockSpec blk;
      blk.r = b.at("r").get<int>();
      blk.b = b.at("b").get<int>();
      blk.ct = parse_conv_type(b.at("ct").get<std::string>());
      blk.wf = b.at("wf").get<int>();
      blk.st = b.value("st", false);
      arch.blocks.push_back(blk);
    }
  } catch (const json::exception& e) {
    throw InvalidArchitecture(std::string("malformed architecture JSON: ") + e.what());
  }
  validate(arch, space);
  return arch;
}

json genome_to_json(const Genome& g) {
  return {{"schema_version", kSchemaVersion}, {"genome", std::vector<double>(g.begin(), g.end())}};
}

Genome genome_from_json(const json& j) {
  std::vector<double> v;
  try {
    v = (j.is_array() ? j : j.at("genome")).get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw InvalidGenome(0, std::string("malformed genome JSON: ") + e.what());
  }
  if (v.size() != kGenomeLength) throw InvalidGenome(v.size(), "expected length " + std::to_string(kGenomeLength));
  Genome g;
  std::copy(v.begin(), v.end(), g.begin());
  return g;
}

}  // namespace imcnas::arch
