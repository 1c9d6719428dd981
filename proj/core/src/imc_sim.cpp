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

#include "imcnas/imc_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace imcnas::sim {

void RpuConfig::check() const {
  if (tile_size < 1) throw ConfigError("rpu.tile_size", "must be >= 1");
  if (!(g_max > 0.0)) throw ConfigError("rpu.g_max", "must be > 0");
  if (!(prog_noise_std >= 0.0)) throw ConfigError("rpu.prog_noise_std", "must be >= 0");
  if (!std::isfinite(nu_mean)) throw ConfigError("rpu.nu_mean", "must be finite");
  if (!(nu_std >= 0.0)) throw ConfigError("rpu.nu_std", "must be >= 0");
  if (!(t0 > 0.0)) throw ConfigError("rpu.t0", "must be > 0");
  if (dac_bits < 0 || dac_bits > 30) throw ConfigError("rpu.dac_bits", "must be in [0, 30]");
  if (adc_bits < 0 || adc_bits > 30) throw ConfigError("rpu.adc_bits", "must be in [0, 30]");
  if (!(input_bound > 0.0)) throw ConfigError("rpu.input_bound", "must be > 0");
  if (!(output_bound > 0.0)) throw ConfigError("rpu.output_bound", "must be > 0");
}

RpuConfig RpuConfig::ideal() const {
  RpuConfig c = *this;
  c.prog_noise_std = 0.0;
  c.nu_mean = 0.0;
  c.nu_std = 0.0;
  c.dac_bits = 0;
  c.adc_bits = 0;
  return c;
}

double quantize(double x, int bits, double bound) noexcept {
  if (bits <= 0) return x;
  const double half_levels = std::ldexp(1.0, bits - 1);
  const double step = bound / half_levels;
  const double q = std::clamp(std::nearbyint(x / step), -half_levels, half_levels - 1.0);
  return q * step;
}

std::vector<ProgrammedTile> map_weights(const Matrix& w, const RpuConfig& cfg, Rng& rng) {
  cfg.check();
  if (w.size() == 0) throw ShapeError("map_weights: empty matrix");
  if (!w.allFinite()) throw ShapeError("map_weights: non-finite weight");

  const double max_abs = w.cwiseAbs().maxCoeff();
  const double scale = max_abs > 0.0 ? cfg.g_max / max_abs : 0.0;
  const Eigen::Index ts = cfg.tile_size;

  std::normal_distribution<double> prog_noise(0.0, cfg.prog_noise_std * cfg.g_max);
  std::normal_distribution<double> nu_dist(cfg.nu_mean, cfg.nu_std);
  const bool noisy = cfg.prog_noise_std > 0.0;
  auto program = [&](double g) {
    if (noisy) g += prog_noise(rng);
    return std::clamp(g, 0.0, cfg.g_max);
  };
  auto draw_nu = [&] { return std::max(0.0, cfg.nu_std > 0.0 ? nu_dist(rng) : cfg.nu_mean); };

  std::vector<ProgrammedTile> tiles;
  for (Eigen::Index r0 = 0; r0 < w.rows(); r0 += ts) {
    for (Eigen::Index c0 = 0; c0 < w.cols(); c0 += ts) {
      const Eigen::Index nr = std::min(ts, w.rows() - r0);
      const Eigen::Index nc = std::min(ts, w.cols() - c0);
      ProgrammedTile t;
      t.row_offset = r0;
      t.col_offset = c0;
      t.scale = scale;
      t.read_time = cfg.t0;
      t.g_plus.resize(nr, nc);
      t.g_minus.resize(nr, nc);
      t.nu_plus.resize(nr, nc);
      t.nu_minus.resize(nr, nc);
      for (Eigen::Index c = 0; c < nc; ++c) {
        for (Eigen::Index r = 0; r < nr; ++r) {
          const double v = w(r0 + r, c0 + c);
          t.g_plus(r, c) = program(std::max(v, 0.0) * scale);
          t.g_minus(r, c) = program(-std::min(v, 0.0) * scale);
          t.nu_plus(r, c) = draw_nu();
          t.nu_minus(r, c) = draw_nu();
        }
      }
      tiles.push_back(std::move(t));
    }
  }
  return tiles;
}

ProgrammedTile drift(const ProgrammedTile& tile, double t, const RpuConfig& cfg) {
  if (!(t >= cfg.t0)) throw InvalidTime("drift: t=" + std::to_string(t) + " is before t0=" + std::to_string(cfg.t0));
  if (tile.read_time != cfg.t0) throw InvalidTime("drift: tile was already drifted");
  ProgrammedTile out = tile;
  out.read_time = t;
  if (t == cfg.t0) return out;
  const double ratio = t / cfg.t0;
  for (Eigen::Index c = 0; c < tile.cols(); ++c) {
    for (Eigen::Index r = 0; r < tile.rows(); ++r) {
      out.g_plus(r, c) = tile.g_plus(r, c) * std::pow(ratio, -tile.nu_plus(r, c));
      out.g_minus(r, c) = tile.g_minus(r, c) * std::pow(ratio, -tile.nu_minus(r, c));
    }
  }
  return out;
}

Matrix mvm_batch(const ProgrammedTile& tile, const Matrix& x, const RpuConfig& cfg) {
  if (x.cols() != tile.rows())
    throw ShapeError("mvm: input has " + std::to_string(x.cols()) + " features, tile has " +
                     std::to_string(tile.rows()) + " rows");
  if (tile.scale == 0.0) return Matrix::Zero(x.rows(), tile.cols());

  const Matrix g = tile.g_plus - tile.g_minus;
  if (cfg.dac_bits == 0 && cfg.adc_bits == 0) return (x * g) / tile.scale;

  Matrix y(x.rows(), tile.cols());
  Vector xn(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double in_scale = x.row(i).cwiseAbs().maxCoeff();
    if (in_scale == 0.0) {
      y.row(i).setZero();
      continue;
    }
    for (Eigen::Index k = 0; k < x.cols(); ++k) xn(k) = quantize(x(i, k) / in_scale, cfg.dac_bits, cfg.input_bound);
    Vector yn = (g.transpose() * xn) / cfg.g_max;
    for (Eigen::Index k = 0; k < yn.size(); ++k) yn(k) = quantize(yn(k), cfg.adc_bits, cfg.output_bound);
    y.row(i) = (yn * (cfg.g_max * in_scale / tile.scale)).transpose();
  }
  return y;
}

Vector mvm(const ProgrammedTile& tile, const Vector& x, const RpuConfig& cfg) {
  if (x.size() != tile.rows())
    throw ShapeError("mvm: input has " + std::to_string(x.size()) + " entries, tile has " +
                     std::to_string(tile.rows()) + " rows");
  return mvm_batch(tile, x.transpose(), cfg).row(0).transpose();
}

AnalogLinear AnalogLinear::program(const Matrix& w, const RpuConfig& cfg, Rng& rng) {
  AnalogLinear layer;
  layer.cfg_ = cfg;
  layer.in_ = w.rows();
  layer.out_ = w.cols();
  layer.tiles_ = map_weights(w, cfg, rng);
  return layer;
}

AnalogLinear AnalogLinear::at_time(double t) const {
  AnalogLinear out;
  out.cfg_ = cfg_;
  out.in_ = in_;
  out.out_ = out_;
  out.tiles_.reserve(tiles_.size());
  for (const auto& tile : tiles_) out.tiles_.push_back(drift(tile, t, cfg_));
  return out;
}

Matrix AnalogLinear::forward(const Matrix& x) const {
  if (x.cols() != in_)
    throw ShapeError("forward: input has " + std::to_string(x.cols()) + " features, layer expects " +
                     std::to_string(in_));
  Matrix y = Matrix::Zero(x.rows(), out_);
  for (const auto& tile : tiles_) {
    y.middleCols(tile.col_offset, tile.cols()) +=
        mvm_batch(tile, x.middleCols(tile.row_offset, tile.rows()), cfg_);
  }
  return y;
}

Matrix linear_forward(const Matrix& w, const Matrix& x_batch, const RpuConfig& cfg, double t, Rng& rng) {
  if (x_batch.cols() != w.rows())
    throw ShapeError("linear_forward: input has " + std::to_string(x_batch.cols()) + " features, weights have " +
                     std::to_string(w.rows()) + " rows");
  return AnalogLinear::program(w, cfg, rng).at_time(t).forward(x_batch);
}

}  // namespace imcnas::sim
