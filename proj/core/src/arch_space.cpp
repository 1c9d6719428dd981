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

#include "imcnas/arch_space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace imcnas::arch {

char to_char(ConvType ct) noexcept { return static_cast<char>('A' + static_cast<int>(ct)); }

ConvType parse_conv_type(std::string_view s) {
  if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'D') return static_cast<ConvType>(s[0] - 'A');
  throw InvalidArchitecture("unknown convolution type '" + std::string(s) + "'");
}

void SearchSpace::check() const {
  auto check_range = [](const char* key, IntRange r, IntRange limit) {
    if (r.lo > r.hi) throw ConfigError(key, "empty range");
    if (r.lo < limit.lo || r.hi > limit.hi)
      throw ConfigError(key, "outside [" + std::to_string(limit.lo) + ", " + std::to_string(limit.hi) + "]");
  };
  check_range("space.oc0", oc0, {1, 4096});
  check_range("space.m", m, {1, static_cast<int>(kMaxBlocks)});
  check_range("space.r", r, {1, 64});
  check_range("space.b", b, {1, 64});
  check_range("space.wf", wf, {1, 16});
  if (ks0.empty()) throw ConfigError("space.ks0", "no kernel sizes");
  for (int k : ks0)
    if (k < 1 || k % 2 == 0) throw ConfigError("space.ks0", "kernel sizes must be positive and odd");
  if (ct.empty()) throw ConfigError("space.ct", "no convolution types");
}

namespace {

bool in_list(const auto& list, const auto& v) { return std::find(list.begin(), list.end(), v) != list.end(); }

}  // namespace

void validate(const Architecture& arch, const SearchSpace& space) {
  auto fail = [](const std::string& what) { throw InvalidArchitecture(what); };
  if (!space.oc0.contains(arch.oc0)) fail("oc0=" + std::to_string(arch.oc0) + " out of range");
  if (!in_list(space.ks0, arch.ks0)) fail("ks0=" + std::to_string(arch.ks0) + " not allowed");
  const int m = static_cast<int>(arch.blocks.size());
  if (!space.m.contains(m)) fail("M=" + std::to_string(m) + " out of range");
  for (std::size_t i = 0; i < arch.blocks.size(); ++i) {
    const auto& blk = arch.blocks[i];
    const std::string where = "block " + std::to_string(i) + ": ";
    if (!space.r.contains(blk.r)) fail(where + "r=" + std::to_string(blk.r) + " out of range");
    if (!space.b.contains(blk.b)) fail(where + "b=" + std::to_string(blk.b) + " out of range");
    if (!in_list(space.ct, blk.ct)) fail(where + "ct=" + std::string(1, to_char(blk.ct)) + " not allowed");
    if (!space.wf.contains(blk.wf)) fail(where + "wf=" + std::to_string(blk.wf) + " out of range");
    if (blk.st && !space.allow_skip_toggle) fail(where + "st not allowed in this space");
  }
}

bool is_valid(const Architecture& arch, const SearchSpace& space) noexcept {
  try {
    validate(arch, space);
    return true;
  } catch (const InvalidArchitecture&) {
    return false;
  }
}

std::string canonical_string(const Architecture& arch) {
  std::string s = std::to_string(arch.oc0) + ":" + std::to_string(arch.ks0);
  for (const auto& blk : arch.blocks) {
    s += "|" + std::to_string(blk.r) + "," + std::to_string(blk.b) + "," + to_char(blk.ct) + "," +
         std::to_string(blk.wf) + "," + (blk.st ? "1" : "0");
  }
  return s;
}

std::uint64_t arch_hash(const Architecture& arch) { return fnv1a64(canonical_string(arch)); }

std::string arch_id(const Architecture& arch) { return to_hex(arch_hash(arch)); }

// ---------------------------------------------------------------------------

Genome encode(const Architecture& arch) {
  Genome g;
  g.fill(kGenomeSentinel);
  g[0] = arch.oc0;
  g[1] = arch.ks0;
  g[2] = static_cast<double>(arch.blocks.size());
  for (std::size_t i = 0; i < arch.blocks.size() && i < kMaxBlocks; ++i) {
    const auto& blk = arch.blocks[i];
    double* slot = g.data() + kStemSlots + i * kBlockSlots;
    slot[0] = blk.r;
    slot[1] = blk.b;
    slot[2] = static_cast<double>(static_cast<int>(blk.ct));
    slot[3] = blk.wf;
    slot[4] = blk.st ? 1.0 : 0.0;
  }
  return g;
}

Architecture decode(std::span<const double> genome, const SearchSpace& space) {
  if (genome.size() != kGenomeLength)
    throw InvalidGenome(genome.size(), "expected length " + std::to_string(kGenomeLength));
  std::array<long, kGenomeLength> v{};
  for (std::size_t i = 0; i < kGenomeLength; ++i) {
    if (!std::isfinite(genome[i])) throw InvalidGenome(i, "not finite");
    v[i] = std::lround(genome[i]);
  }
  auto require = [&](std::size_t slot, bool ok, const char* what) {
    if (!ok) throw InvalidGenome(slot, std::string(what) + " (value " + std::to_string(v[slot]) + ")");
  };

  Architecture arch;
  require(0, space.oc0.contains(static_cast<int>(v[0])), "oc0 out of range");
  require(1, in_list(space.ks0, static_cast<int>(v[1])), "ks0 not allowed");
  require(2, space.m.contains(static_cast<int>(v[2])), "M out of range");
  arch.oc0 = static_cast<int>(v[0]);
  arch.ks0 = static_cast<int>(v[1]);
  const auto m = static_cast<std::size_t>(v[2]);

  for (std::size_t i = 0; i < kMaxBlocks; ++i) {
    const std::size_t base = kStemSlots + i * kBlockSlots;
    if (i >= m) {
      for (std::size_t k = 0; k < kBlockSlots; ++k)
        require(base + k, v[base + k] == static_cast<long>(kGenomeSentinel), "expected padding after block M");
      continue;
    }
    MainBlockSpec blk;
    require(base + 0, space.r.contains(static_cast<int>(v[base + 0])), "r out of range");
    require(base + 1, space.b.contains(static_cast<int>(v[base + 1])), "b out of range");
    require(base + 2, v[base + 2] >= 0 && v[base + 2] <= 3, "ct code out of range");
    blk.r = static_cast<int>(v[base + 0]);
    blk.b = static_cast<int>(v[base + 1]);
    blk.ct = static_cast<ConvType>(v[base + 2]);
    require(base + 2, in_list(space.ct, blk.ct), "ct not allowed");
    require(base + 3, space.wf.contains(static_cast<int>(v[base + 3])), "wf out of range");
    blk.wf = static_cast<int>(v[base + 3]);
    require(base + 4, v[base + 4] == 0 || v[base + 4] == 1, "st must be 0 or 1");
    blk.st = v[base + 4] == 1;
    require(base + 4, !blk.st || space.allow_skip_toggle, "st not allowed in this space");
    arch.blocks.push_back(blk);
  }
  return arch;
}

// ---------------------------------------------------------------------------

std::vector<Layer> build_layers(const Architecture& arch, const InputShape& input, int num_classes) {
  if (input.channels < 1 || input.height < 1 || input.width < 1) throw ShapeError("input shape must be positive");
  if (num_classes < 1) throw ShapeError("num_classes must be positive");

  std::vector<Layer> layers;
  layers.push_back({LayerRole::kStem, input.channels, arch.oc0, arch.ks0, 1});
  int channels = arch.oc0;
  for (std::size_t i = 0; i < arch.blocks.size(); ++i) {
    const auto& blk = arch.blocks[i];
    const int out = (arch.oc0 << i) * blk.wf;
    for (int j = 0; j < blk.r; ++j) {
      const int stride = (i > 0 && j == 0) ? 2 : 1;
      const int in = channels;
      if (is_bottleneck(blk.ct)) {
        const int mid = std::max(1, out / 4);
        layers.push_back({LayerRole::kReduce, in, mid, 1, 1});
        for (int k = 0; k < blk.b; ++k) layers.push_back({LayerRole::kBranch, mid, mid, 3, stride});
        layers.push_back({LayerRole::kExpand, mid, out, 1, 1});
      } else {
        for (int k = 0; k < blk.b; ++k) {
          layers.push_back({LayerRole::kBranch, in, out, 3, stride});
          layers.push_back({LayerRole::kBranch, out, out, 3, 1});
        }
      }
      if (in != out || stride != 1 || blk.st) layers.push_back({LayerRole::kProjection, in, out, 1, stride});
      channels = out;
    }
  }
  layers.push_back({LayerRole::kClassifier, channels, num_classes, 1, 1});
  return layers;
}

std::int64_t param_count(std::span<const Layer> layers, CountPolicy policy) {
  std::int64_t total = 0;
  for (const auto& l : layers) {
    const std::int64_t k2 = static_cast<std::int64_t>(l.kernel) * l.kernel;
    total += static_cast<std::int64_t>(l.in) * l.out * k2;
    if (l.is_dense()) {
      if (policy.classifier_bias) total += l.out;
    } else if (policy.batchnorm) {
      total += 2 * static_cast<std::int64_t>(l.out);
    }
  }
  return total;
}

std::int64_t param_count(const Architecture& arch, const InputShape& input, int num_classes, CountPolicy policy) {
  const auto layers = build_layers(arch, input, num_classes);
  return param_count(layers, policy);
}

int depth(std::span<const Layer> layers) {
  return static_cast<int>(
      std::count_if(layers.begin(), layers.end(), [](const Layer& l) { return l.role != LayerRole::kProjection; }));
}

int depth(const Architecture& arch) {
  const auto layers = build_layers(arch);
  return depth(layers);
}

std::vector<LayerMatrix> layer_matrices(std::span<const Layer> layers) {
  std::vector<LayerMatrix> out;
  out.reserve(layers.size());
  for (const auto& l : layers) {
    out.push_back({static_cast<std::int64_t>(l.in) * l.kernel * l.kernel, l.out, 1});
  }
  return out;
}

std::vector<LayerMatrix> layer_matrices(const Architecture& arch, const InputShape& input, int num_classes) {
  const auto layers = build_layers(arch, input, num_classes);
  return layer_matrices(layers);
}

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

}  // namespace

std::int64_t tile_count(std::span<const LayerMatrix> layers, std::int64_t tile_size, TileMapping mapping) {
  if (tile_size < 1) throw ShapeError("tile_size must be positive");
  std::int64_t tiles = 0;
  for (const auto& l : layers) {
    if (l.rows < 1 || l.cols < 1) throw ShapeError("layer matrix must be at least 1x1");
    const std::int64_t cols = mapping == TileMapping::kColumnDifferential ? 2 * l.cols : l.cols;
    tiles += ceil_div(l.rows, tile_size) * ceil_div(cols, tile_size) * l.count;
  }
  return mapping == TileMapping::kTileDifferential ? 2 * tiles : tiles;
}

double tile_utilization(std::span<const LayerMatrix> layers, std::int64_t tile_size, TileMapping mapping) {
  const std::int64_t tiles = tile_count(layers, tile_size, mapping);
  if (tiles == 0) return 0.0;
  double used = 0.0;
  for (const auto& l : layers) used += 2.0 * static_cast<double>(l.rows) * static_cast<double>(l.cols) * l.count;
  return used / (static_cast<double>(tiles) * static_cast<double>(tile_size) * static_cast<double>(tile_size));
}

double mean_widening_factor(const Architecture& arch) noexcept {
  if (arch.blocks.empty()) return 0.0;
  double s = 0.0;
  for (const auto& blk : arch.blocks) s += blk.wf;
  return s / static_cast<double>(arch.blocks.size());
}

double mean_branches(const Architecture& arch) noexcept {
  if (arch.blocks.empty()) return 0.0;
  return static_cast<double>(total_branches(arch)) / static_cast<double>(arch.blocks.size());
}

int total_branches(const Architecture& arch) noexcept {
  int s = 0;
  for (const auto& blk : arch.blocks) s += blk.b;
  return s;
}

// ---------------------------------------------------------------------------

namespace {

Architecture make(int oc0, int ks0, std::initializer_list<MainBlockSpec> blocks) {
  return Architecture{oc0, ks0, std::vector<MainBlockSpec>(blocks)};
}

constexpr MainBlockSpec blk(int r, int b, ConvType ct, int wf) { return {r, b, ct, wf, false}; }

}  // namespace

const std::vector<NamedArchitecture>& published_architectures() {
  using enum ConvType;
  static const std::vector<NamedArchitecture> kAll = {
      {"Resnet32", "cifar10", make(64, 7, {blk(5, 1, B, 1), blk(5, 1, B, 1), blk(5, 1, B, 1)})},
      {"AnalogNAS_T100", "cifar10", make(32, 3, {blk(2, 1, C, 2)})},
      {"AnalogNAS_T300", "cifar10", make(32, 3, {blk(3, 1, A, 2), blk(3, 1, B, 1)})},
      {"AnalogNAS_T500", "cifar10", make(64, 5, {blk(3, 3, A, 2)})},
      {"AnalogNAS_T1M", "cifar10", make(32, 5, {blk(3, 2, A, 3), blk(3, 2, A, 3)})},
      {"AnalogNAS_T200", "vww", make(24, 3, {blk(2, 1, B, 2), blk(2, 2, A, 2), blk(2, 1, A, 2)})},
      {"AnalogNAS_T400", "vww", make(68, 3, {blk(3, 2, C, 3), blk(5, 1, C, 2)})},
      {"AnalogNAS_T200", "kws", make(80, 1, {blk(1, 2, C, 4)})},
      {"AnalogNAS_T400", "kws", make(68, 1, {blk(2, 1, B, 3), blk(1, 2, B, 3)})},
  };
  return kAll;
}

const Architecture& published(std::string_view task_and_name) {
  for (const auto& n : published_architectures()) {
    if (n.task + "/" + n.name == task_and_name) return n.arch;
  }
  throw InvalidArchitecture("no published architecture named '" + std::string(task_and_name) + "'");
}

Architecture resnet32_reference() {
  using enum ConvType;
  return make(16, 3, {blk(5, 1, B, 1), blk(5, 1, B, 1), blk(5, 1, B, 1)});
}

}  // namespace imcnas::arch
