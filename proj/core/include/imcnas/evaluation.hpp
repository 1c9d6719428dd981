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

// Ground-truth fitness: accuracy after conductance drift, across trials.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "imcnas/arch_space.hpp"
#include "imcnas/imc_sim.hpp"

namespace imcnas::eval {

using arch::Architecture;
using sim::RpuConfig;

inline constexpr double kOneSecond = 1.0;
inline constexpr double kOneDay = 86'400.0;
inline constexpr double kOneMonth = 2'592'000.0;  // 30 days

/// {1 s, 1 day, 1 month} with 1 s clamped to t0.
std::vector<double> default_times(const RpuConfig& rpu);

struct EvalRecord {
  std::string arch_id;
  std::vector<double> times;             // effective read times, seconds
  std::vector<std::vector<double>> acc;  // [trial][time], in [0, 1]
  double acc_1day_mean = 0.0;
  double acc_1day_std = 0.0;  // sample standard deviation; 0 for one trial
  double avm = 0.0;           // mean acc at first time minus mean acc at 1 month
  std::string backend;
  std::uint64_t seed = 0;
};

/// Fills the derived statistics from `acc`. The first time is the 1 s point;
/// kOneDay and kOneMonth must be present.
EvalRecord make_record(std::string arch_id, std::vector<double> times, std::vector<std::vector<double>> acc,
                       std::string backend, std::uint64_t seed);

nlohmann::json to_json(const EvalRecord& rec);
EvalRecord record_from_json(const nlohmann::json& j);

nlohmann::json rpu_to_json(const RpuConfig& rpu);
/// Missing keys keep their defaults; unknown keys throw SchemaError.
RpuConfig rpu_from_json(const nlohmann::json& j);

/// Source of accuracies. One trial is one programming instance read at every
/// requested time; implementations must be deterministic in trial_seed.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual std::vector<double> trial(const Architecture& arch, const RpuConfig& rpu, std::span<const double> times,
                                    std::uint64_t trial_seed) const = 0;
  /// All trials at once; override when per-architecture setup can be shared.
  virtual std::vector<std::vector<double>> trials(const Architecture& arch, const RpuConfig& rpu,
                                                  std::span<const double> times,
                                                  std::span<const std::uint64_t> trial_seeds) const;
};

/// Trial seeds derive from (seed, architecture, trial index). Backend failures
/// surface as EvalError carrying the architecture id.
EvalRecord evaluate(const Architecture& arch, const RpuConfig& rpu, const Backend& backend, int n_trials,
                    std::uint64_t seed);

std::vector<std::uint64_t> trial_seeds(const Architecture& arch, int n_trials, std::uint64_t seed);

/// ACC / max(sigma, eps), the constrained objective used at ground truth.
inline constexpr double kSigmaFloor = 1e-4;
inline double objective(const EvalRecord& rec) noexcept {
  return rec.acc_1day_mean / (rec.acc_1day_std > kSigmaFloor ? rec.acc_1day_std : kSigmaFloor);
}

// ---------------------------------------------------------------------------
// Synthetic oracle
// ---------------------------------------------------------------------------

/// Fixed constants of the synthetic oracle. Changing any of them changes every
/// golden value derived from it, so bump `version` alongside.
struct OracleCoefficients {
  int version = 1;
  // base accuracy
  double acc_ceiling = 0.88;
  double depth_weight = 0.30;   // penalty for log-distance from the preferred depth
  double preferred_depth = 24.0;
  double depth_spread = 1.0;
  double width_weight = 0.04;   // penalty per unit of missing mean widening factor, scaled to [0, 1]
  double branch_weight = 0.01;
  double preferred_branches = 2.0;
  double capacity_weight = 0.08;
  double capacity_scale = 150'000.0;  // parameters
  double stem_kernel_weight = 0.003;
  // programming-noise penalty
  double noise_weight = 0.25;
  double noise_saturation = 1.5;
  // drift penalty per decade of t / t0
  double drift_weight = 0.0033;
  double reference_nu = 0.06;
  double reference_depth = 17.0;
  double depth_exponent = 0.75;
  double utilization_weight = 0.4;
  double width_relief = 0.1;  // per unit of mean widening factor
  // trial-to-trial jitter
  double jitter_width = 0.006;
  double jitter_floor = 0.002;

  nlohmann::json to_json() const;
};

class SyntheticOracle final : public Backend {
 public:
  struct Terms {
    double base = 0.0;
    double noise_penalty = 0.0;
    double drift_penalty = 0.0;
    double jitter_sigma = 0.0;
  };

  explicit SyntheticOracle(OracleCoefficients coeffs = {}, arch::InputShape input = {}, int num_classes = 10);

  std::string name() const override { return "synthetic-oracle"; }
  std::vector<double> trial(const Architecture& arch, const RpuConfig& rpu, std::span<const double> times,
                            std::uint64_t trial_seed) const override;

  /// clamp(base - noise_penalty - drift_penalty(t) + jitter, 0, 1); the jitter
  /// is drawn once per trial seed and shared by every time point.
  double accuracy(const Architecture& arch, const RpuConfig& rpu, double t, std::uint64_t trial_seed) const;
  Terms terms(const Architecture& arch, const RpuConfig& rpu, double t) const;

  const OracleCoefficients& coefficients() const noexcept { return coeffs_; }

 private:
  OracleCoefficients coeffs_;
  arch::InputShape input_;
  int num_classes_;
};

// ---------------------------------------------------------------------------
// Tiny analog network
// ---------------------------------------------------------------------------

struct TinyNetOptions {
  int features = 16;
  int train_samples = 512;
  int test_samples = 1024;
  double class_separation = 3.0;  // distance between blob centers, in units of the blob std
  std::uint64_t data_seed = 20240301;
  int epochs = 60;
  int batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  bool hwa_training = true;
  /// Relative weight-noise std during training; negative means use the
  /// programming noise of the RpuConfig.
  double train_noise_std = -1.0;
  /// Read time whose drift spread is emulated during training: each weight
  /// also receives noise of std nu_std * ln(horizon / t0) * |w|. Values not
  /// above t0 disable it.
  double drift_noise_horizon = kOneMonth;
};

/// Two-layer dense classifier on a fixed two-class Gaussian-blob problem (two
/// blobs per class in XOR layout, so the hidden layer is needed). The
/// hidden width follows the architecture's width; inference runs through the
/// crossbar model with biases held on an extra crossbar row.
class TinyNetBackend final : public Backend {
 public:
  explicit TinyNetBackend(TinyNetOptions opts = {});

  std::string name() const override { return "tiny-net"; }
  std::vector<double> trial(const Architecture& arch, const RpuConfig& rpu, std::span<const double> times,
                            std::uint64_t trial_seed) const override;
  std::vector<std::vector<double>> trials(const Architecture& arch, const RpuConfig& rpu, std::span<const double> times,
                                          std::span<const std::uint64_t> trial_seeds) const override;

  static int hidden_width(const Architecture& arch) noexcept;
  /// Test accuracy of the trained network with exact digital arithmetic.
  double digital_accuracy(const Architecture& arch, const RpuConfig& rpu) const;

  struct Weights {
    sim::Matrix w1;  // (features + 1) x hidden, last row is the bias
    sim::Matrix w2;  // (hidden + 1) x 2
  };
  Weights train(const Architecture& arch, const RpuConfig& rpu) const;

  const TinyNetOptions& options() const noexcept { return opts_; }

 private:
  TinyNetOptions opts_;
  sim::Matrix train_x_, test_x_;
  std::vector<int> train_y_, test_y_;
};

enum class BackendKind { kSyntheticOracle, kTinyNet };

std::unique_ptr<Backend> make_backend(BackendKind kind, const arch::InputShape& input = {}, int num_classes = 10);

}  // namespace imcnas::eval
