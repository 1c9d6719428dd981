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

#include <algorithm>
#include <cmath>

#include "imcnas/evaluation.hpp"

namespace imcnas::eval {

nlohmann::json OracleCoefficients::to_json() const {
  return {{"version", version},
          {"acc_ceiling", acc_ceiling},
          {"depth_weight", depth_weight},
          {"preferred_depth", preferred_depth},
          {"depth_spread", depth_spread},
          {"width_weight", width_weight},
          {"branch_weight", branch_weight},
          {"preferred_branches", preferred_branches},
          {"capacity_weight", capacity_weight},
          {"capacity_scale", capacity_scale},
          {"stem_kernel_weight", stem_kernel_weight},
          {"noise_weight", noise_weight},
          {"noise_saturation", noise_saturation},
          {"drift_weight", drift_weight},
          {"reference_nu", reference_nu},
          {"reference_depth", reference_depth},
          {"depth_exponent", depth_exponent},
          {"utilization_weight", utilization_weight},
          {"width_relief", width_relief},
          {"jitter_width", jitter_width},
          {"jitter_floor", jitter_floor}};
}

SyntheticOracle::SyntheticOracle(OracleCoefficients coeffs, arch::InputShape input, int num_classes)
    : coeffs_(coeffs), input_(input), num_classes_(num_classes) {}

namespace {

// Small fixed offsets so block types are distinguishable.
double conv_type_bonus(arch::ConvType ct) {
  switch (ct) {
    case arch::ConvType::A: return 0.004;
    case arch::ConvType::B: return 0.0;
    case arch::ConvType::C: return 0.002;
    case arch::ConvType::D: return -0.002;
  }
  return 0.0;
}

}  // namespace

SyntheticOracle::Terms SyntheticOracle::terms(const Architecture& a, const RpuConfig& rpu, double t) const {
  const auto& c = coeffs_;
  const auto layers = arch::build_layers(a, input_, num_classes_);
  const double d = arch::depth(layers);
  const double params = static_cast<double>(arch::param_count(layers));
  const auto mats = arch::layer_matrices(layers);
  const double util = arch::tile_utilization(mats, rpu.tile_size, rpu.mapping);
  const double wf = arch::mean_widening_factor(a);
  const double branches = arch::mean_branches(a);

  Terms out;
  const double log_depth = std::log(d / c.preferred_depth) / c.depth_spread;
  const double log_branch = std::log(branches / c.preferred_branches);
  double ct_bonus = 0.0;
  for (const auto& blk : a.blocks) ct_bonus += conv_type_bonus(blk.ct);
  ct_bonus /= static_cast<double>(a.blocks.size());
  out.base = c.acc_ceiling - c.depth_weight * (1.0 - std::exp(-0.5 * log_depth * log_depth)) -
             c.width_weight * (4.0 - wf) / 3.0 - c.branch_weight * log_branch * log_branch +
             c.capacity_weight * (1.0 - std::exp(-params / c.capacity_scale)) -
             c.stem_kernel_weight * std::abs(a.ks0 - 3) / 2.0 + ct_bonus;

  const double depth_factor = std::pow(d / c.reference_depth, c.depth_exponent);
  const double util_factor = (1.0 - c.utilization_weight) + c.utilization_weight * (1.0 - util);
  const double width_factor = 1.0 + c.width_relief * (3.0 - wf);

  out.noise_penalty = c.noise_weight * (1.0 - std::exp(-rpu.prog_noise_std / c.noise_saturation)) * util_factor *
                      std::sqrt(d / c.reference_depth);

  const double te = sim::effective_time(t, rpu);
  if (rpu.nu_mean > 0.0 && te > rpu.t0) {
    out.drift_penalty = c.drift_weight * (rpu.nu_mean / c.reference_nu) * std::log10(te / rpu.t0) * depth_factor *
                        util_factor * width_factor;
  }
  out.jitter_sigma = c.jitter_floor + c.jitter_width / wf;
  return out;
}

double SyntheticOracle::accuracy(const Architecture& a, const RpuConfig& rpu, double t, std::uint64_t trial_seed) const {
  const Terms tm = terms(a, rpu, t);
  Rng rng(trial_seed);
  const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
  return std::clamp(tm.base - tm.noise_penalty - tm.drift_penalty + tm.jitter_sigma * z, 0.0, 1.0);
}

std::vector<double> SyntheticOracle::trial(const Architecture& a, const RpuConfig& rpu, std::span<const double> times,
                                           std::uint64_t trial_seed) const {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(accuracy(a, rpu, t, trial_seed));
  return out;
}

}  // namespace imcnas::eval
