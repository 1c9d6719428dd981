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
#include <numeric>

#include "imcnas/evaluation.hpp"

namespace imcnas::eval {

using sim::Matrix;

namespace {

// Two blobs per class in XOR layout on the plane spanned by u and v; adjacent
// centers are `separation` apart.
void make_blobs(int n, int features, double separation, Rng& rng, const sim::Vector& u, const sim::Vector& v,
                Matrix& x, std::vector<int>& y) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  x.resize(n, features);
  y.resize(static_cast<std::size_t>(n));
  const double a = 0.5 * separation;
  for (int i = 0; i < n; ++i) {
    const int label = i % 2;
    const double su = (i / 2) % 2 == 0 ? a : -a;
    const double sv = label == 0 ? su : -su;
    for (int k = 0; k < features; ++k) x(i, k) = gauss(rng) + su * u(k) + sv * v(k);
    y[static_cast<std::size_t>(i)] = label;
  }
}

Matrix with_bias(const Matrix& x) {
  Matrix out(x.rows(), x.cols() + 1);
  out.leftCols(x.cols()) = x;
  out.col(x.cols()).setOnes();
  return out;
}

double accuracy_of(const Matrix& logits, const std::vector<int>& y) {
  int correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int pred = logits(i, 1) > logits(i, 0) ? 1 : 0;
    correct += pred == y[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

// w + N(0, abs_std * max|w|) + N(0, prop_std * |w|) per element.
Matrix perturb(const Matrix& w, double abs_std, double prop_std, Rng& rng) {
  if (abs_std <= 0.0 && prop_std <= 0.0) return w;
  const double max_abs = w.cwiseAbs().maxCoeff();
  if (max_abs == 0.0) return w;
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix out = w;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    double& x = out.data()[i];
    x += (abs_std * max_abs + prop_std * std::abs(x)) * gauss(rng);
  }
  return out;
}

}  // namespace

TinyNetBackend::TinyNetBackend(TinyNetOptions opts) : opts_(opts) {
  if (opts_.features < 1 || opts_.train_samples < 2 || opts_.test_samples < 2 || opts_.epochs < 0 ||
      opts_.batch_size < 1)
    throw ConfigError("backend.tiny_net", "invalid tiny-net options");
  Rng rng(opts_.data_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  sim::Vector u(opts_.features), v(opts_.features);
  for (int k = 0; k < opts_.features; ++k) u(k) = gauss(rng);
  for (int k = 0; k < opts_.features; ++k) v(k) = gauss(rng);
  u.normalize();
  if (opts_.features > 1) v -= v.dot(u) * u;
  v.normalize();
  make_blobs(opts_.train_samples, opts_.features, opts_.class_separation, rng, u, v, train_x_, train_y_);
  make_blobs(opts_.test_samples, opts_.features, opts_.class_separation, rng, u, v, test_x_, test_y_);
}

int TinyNetBackend::hidden_width(const Architecture& a) noexcept {
  const double h = std::round(4.0 * arch::mean_widening_factor(a) * std::sqrt(static_cast<double>(a.oc0)));
  return static_cast<int>(std::clamp(h, 8.0, 128.0));
}

TinyNetBackend::Weights TinyNetBackend::train(const Architecture& a, const RpuConfig& rpu) const {
  const int f = opts_.features;
  const int h = hidden_width(a);
  Rng rng(derive_seed(opts_.data_seed, {0x7a1e, static_cast<std::uint64_t>(h)}));

  Weights w;
  std::normal_distribution<double> init1(0.0, std::sqrt(2.0 / f));
  std::normal_distribution<double> init2(0.0, std::sqrt(1.0 / h));
  w.w1 = Matrix::Zero(f + 1, h);
  w.w2 = Matrix::Zero(h + 1, 2);
  for (int i = 0; i < f; ++i)
    for (int j = 0; j < h; ++j) w.w1(i, j) = init1(rng);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < 2; ++j) w.w2(i, j) = init2(rng);

  double noise = 0.0, drift_noise = 0.0;
  if (opts_.hwa_training) {
    noise = opts_.train_noise_std >= 0.0 ? opts_.train_noise_std : rpu.prog_noise_std;
    if (opts_.drift_noise_horizon > rpu.t0) drift_noise = rpu.nu_std * std::log(opts_.drift_noise_horizon / rpu.t0);
  }

  const Matrix xb = with_bias(train_x_);
  const int n = static_cast<int>(xb.rows());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Matrix v1 = Matrix::Zero(w.w1.rows(), w.w1.cols());
  Matrix v2 = Matrix::Zero(w.w2.rows(), w.w2.cols());

  for (int epoch = 0; epoch < opts_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int start = 0; start < n; start += opts_.batch_size) {
      const int m = std::min(opts_.batch_size, n - start);
      Matrix x(m, xb.cols());
      std::vector<int> y(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) {
        const int idx = order[static_cast<std::size_t>(start + i)];
        x.row(i) = xb.row(idx);
        y[static_cast<std::size_t>(i)] = train_y_[static_cast<std::size_t>(idx)];
      }
      const Matrix w1n = perturb(w.w1, noise, drift_noise, rng);
      const Matrix w2n = perturb(w.w2, noise, drift_noise, rng);

      const Matrix z1 = x * w1n;
      const Matrix a1 = with_bias(z1.cwiseMax(0.0));
      const Matrix logits = a1 * w2n;

      Matrix d2(m, 2);
      for (int i = 0; i < m; ++i) {
        const double mx = logits.row(i).maxCoeff();
        const double e0 = std::exp(logits(i, 0) - mx);
        const double e1 = std::exp(logits(i, 1) - mx);
        const double p1 = e1 / (e0 + e1);
        const int yi = y[static_cast<std::size_t>(i)];
        d2(i, 0) = (1.0 - p1) - (yi == 0 ? 1.0 : 0.0);
        d2(i, 1) = p1 - (yi == 1 ? 1.0 : 0.0);
      }
      d2 /= static_cast<double>(m);
      const Matrix g2 = a1.transpose() * d2;
      Matrix d1 = (d2 * w2n.topRows(h).transpose()).cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
      const Matrix g1 = x.transpose() * d1;

      v1 = opts_.momentum * v1 - opts_.learning_rate * g1;
      v2 = opts_.momentum * v2 - opts_.learning_rate * g2;
      w.w1 += v1;
      w.w2 += v2;
    }
  }
  return w;
}

double TinyNetBackend::digital_accuracy(const Architecture& a, const RpuConfig& rpu) const {
  const Weights w = train(a, rpu);
  const Matrix hidden = with_bias((with_bias(test_x_) * w.w1).cwiseMax(0.0));
  return accuracy_of(hidden * w.w2, test_y_);
}

std::vector<double> TinyNetBackend::trial(const Architecture& a, const RpuConfig& rpu, std::span<const double> times,
                                          std::uint64_t trial_seed) const {
  const std::uint64_t seeds[] = {trial_seed};
  return trials(a, rpu, times, seeds).front();
}

std::vector<std::vector<double>> TinyNetBackend::trials(const Architecture& a, const RpuConfig& rpu,
                                                        std::span<const double> times,
                                                        std::span<const std::uint64_t> trial_seeds) const {
  rpu.check();
  const Weights w = train(a, rpu);
  const Matrix xb = with_bias(test_x_);
  std::vector<std::vector<double>> out;
  out.reserve(trial_seeds.size());
  for (std::uint64_t s : trial_seeds) {
    Rng rng(s);
    const auto l1 = sim::AnalogLinear::program(w.w1, rpu, rng);
    const auto l2 = sim::AnalogLinear::program(w.w2, rpu, rng);
    std::vector<double> row;
    row.reserve(times.size());
    for (double t : times) {
      const double te = sim::effective_time(t, rpu);
      const Matrix hidden = with_bias(l1.at_time(te).forward(xb).cwiseMax(0.0));
      row.push_back(accuracy_of(l2.at_time(te).forward(hidden), test_y_));
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace imcnas::eval
