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

// Analog crossbar inference model.
//
// A weight matrix W (in x out, so that y^T = x^T W) is split into
// W+ = max(W, 0) and W- = -min(W, 0), scaled so that max|W| maps to g_max, and
// partitioned into tile_size x tile_size blocks. Each device receives additive
// programming noise and an i.i.d. drift exponent nu; reading at time t scales
// every conductance by (t / t0)^-nu. Partial sums across row tiles are added
// digitally at full precision.
//
// Converters are uniform and symmetric. With b bits an input vector is
// normalized by its absolute maximum and quantized to 2^b levels in
// [-input_bound, input_bound]; column outputs, in units of g_max times the
// normalized input, are quantized to 2^b levels in [-output_bound,
// output_bound]. Zero bits means an ideal converter without clipping.

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "imcnas/common.hpp"

namespace imcnas::sim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct RpuConfig {
  int tile_size = 512;
  double g_max = 25.0;          // microsiemens
  double prog_noise_std = 0.0;  // fraction of g_max
  double nu_mean = 0.06;
  double nu_std = 0.02;
  double t0 = 20.0;  // seconds
  int dac_bits = 0;
  int adc_bits = 0;
  double input_bound = 1.0;
  double output_bound = 12.0;
  TileMapping mapping = TileMapping::kColumnDifferential;

  /// Throws ConfigError naming the offending field.
  void check() const;
  /// Same knobs without any non-ideality: no noise, no drift, ideal converters.
  RpuConfig ideal() const;

  friend bool operator==(const RpuConfig&, const RpuConfig&) = default;
};

/// Read time actually used for a nominal time point: drift is undefined before
/// t0, so earlier times read the freshly programmed state.
inline double effective_time(double t, const RpuConfig& cfg) noexcept { return t < cfg.t0 ? cfg.t0 : t; }

struct ProgrammedTile {
  Matrix g_plus;    // rows x cols, microsiemens
  Matrix g_minus;
  Matrix nu_plus;   // per-device drift exponents
  Matrix nu_minus;
  double scale = 0.0;  // conductance per unit weight; 0 for an all-zero layer
  Eigen::Index row_offset = 0;
  Eigen::Index col_offset = 0;
  double read_time = 0.0;  // t0 right after programming

  Eigen::Index rows() const noexcept { return g_plus.rows(); }
  Eigen::Index cols() const noexcept { return g_plus.cols(); }
};

/// Uniform symmetric quantizer: 2^bits levels with step bound / 2^(bits-1),
/// clipped to the representable range. bits == 0 returns x unchanged.
double quantize(double x, int bits, double bound) noexcept;

std::vector<ProgrammedTile> map_weights(const Matrix& w, const RpuConfig& cfg, Rng& rng);

/// Conductances at time t >= t0 from a freshly programmed tile. The input is
/// left untouched. Throws InvalidTime for t < t0 or an already drifted tile.
ProgrammedTile drift(const ProgrammedTile& tile, double t, const RpuConfig& cfg);

/// y = (G+ - G-)^T dac(x) / scale through the ADC. Throws ShapeError unless
/// x.size() == tile.rows().
Vector mvm(const ProgrammedTile& tile, const Vector& x, const RpuConfig& cfg);

/// Batched form of mvm: x is batch x tile.rows().
Matrix mvm_batch(const ProgrammedTile& tile, const Matrix& x, const RpuConfig& cfg);

/// A dense layer programmed once and read at any number of times.
class AnalogLinear {
 public:
  static AnalogLinear program(const Matrix& w, const RpuConfig& cfg, Rng& rng);

  AnalogLinear at_time(double t) const;
  /// x is batch x in; returns batch x out.
  Matrix forward(const Matrix& x) const;

  Eigen::Index in_features() const noexcept { return in_; }
  Eigen::Index out_features() const noexcept { return out_; }
  const std::vector<ProgrammedTile>& tiles() const noexcept { return tiles_; }

 private:
  RpuConfig cfg_;
  Eigen::Index in_ = 0;
  Eigen::Index out_ = 0;
  std::vector<ProgrammedTile> tiles_;
};

/// map_weights + drift + tiled mvm with digital accumulation. x_batch is
/// batch x in; returns batch x out.
Matrix linear_forward(const Matrix& w, const Matrix& x_batch, const RpuConfig& cfg, double t, Rng& rng);

}  // namespace imcnas::sim
