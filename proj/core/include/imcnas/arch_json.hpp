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

// JSON forms of architectures and genomes.
//
//   architecture: {"schema_version":1,"oc0":64,"ks0":5,
//                  "blocks":[{"r":3,"b":3,"ct":"A","wf":2,"st":false}]}
//   genome:       {"schema_version":1,"genome":[64,5,1,3,3,0,2,0,-1,...]}

#pragma once

#include <nlohmann/json.hpp>

#include "imcnas/arch_space.hpp"

namespace imcnas::arch {

nlohmann::json to_json(const Architecture& arch);
/// Throws InvalidArchitecture on malformed input or an out-of-space result.
Architecture architecture_from_json(const nlohmann::json& j, const SearchSpace& space = {});

nlohmann::json genome_to_json(const Genome& g);
Genome genome_from_json(const nlohmann::json& j);

}  // namespace imcnas::arch
