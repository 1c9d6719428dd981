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

#include <span>

namespace imcnas::surrogate {

/// Kendall tau-b between two equally long sequences (length >= 2). Pairs tied
/// in either sequence count toward neither concordance nor discordance; the
/// result is 0 when either sequence is constant. Throws ShapeError otherwise.
double kendall_tau(std::span<const double> scores, std::span<const double> labels);

}  // namespace imcnas::surrogate
