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

// ResNet-like macro-architecture search space.
//
// An architecture is a stem convolution followed by M main blocks. Main block
// i holds `r` residual blocks whose output width is oc0 * 2^i * wf; the first
// residual block of every main block after the first halves the spatial size.
// Residual block bodies depend on the convolution type:
//
//   B / D  basic:       b parallel branches, each two 3x3 convolutions.
//   A / C  bottleneck:  1x1 reduce to width/4, b parallel 3x3 convolutions,
//                       1x1 expand back to the block width.
//
// C and D differ from A and B only in the ReLU/BatchNorm order, which has no
// effect on the weight inventory. The identity path carries a 1x1 projection
// whenever input and output shapes differ, or on every residual block of a
// main block whose `st` flag is set.

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "imcnas/common.hpp"

namespace imcnas::arch {

enum class ConvType : std::uint8_t { A = 0, B = 1, C = 2, D = 3 };

char to_char(ConvType ct) noexcept;
ConvType parse_conv_type(std::string_view s);
inline bool is_bottleneck(ConvType ct) noexcept { return ct == ConvType::A || ct == ConvType::C; }

struct MainBlockSpec {
  int r = 1;   // residual blocks
  int b = 1;   // parallel branches per residual block
  ConvType ct = ConvType::B;
  int wf = 1;  // widening factor
  bool st = false;  // force 1x1 projections on the identity path

  friend bool operator==(const MainBlockSpec&, const MainBlockSpec&) = default;
};

struct Architecture {
  int oc0 = 16;
  int ks0 = 3;
  std::vector<MainBlockSpec> blocks;

  std::size_t num_blocks() const noexcept { return blocks.size(); }
  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct IntRange {
  int lo = 0;
  int hi = 0;
  int size() const noexcept { return hi - lo + 1; }
  bool contains(int v) const noexcept { return v >= lo && v <= hi; }
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

/// Bounds of the searchable hyper-parameters. The defaults are the full space;
/// tests and experiments narrow it to enumerable sub-spaces.
struct SearchSpace {
  IntRange oc0{8, 128};
  std::vector<int> ks0{1, 3, 5, 7};
  IntRange m{1, 5};
  IntRange r{1, 16};
  IntRange b{1, 12};
  std::vector<ConvType> ct{ConvType::A, ConvType::B, ConvType::C, ConvType::D};
  IntRange wf{1, 4};
  bool allow_skip_toggle = true;

  static SearchSpace full() { return {}; }
  /// Throws ConfigError when a range is empty or exceeds the genome limits.
  void check() const;
  friend bool operator==(const SearchSpace&, const SearchSpace&) = default;
};

struct InputShape {
  int channels = 3;
  int height = 32;
  int width = 32;
};

/// Throws InvalidArchitecture naming the first field outside `space`.
void validate(const Architecture& arch, const SearchSpace& space = {});
bool is_valid(const Architecture& arch, const SearchSpace& space = {}) noexcept;

/// Canonical text form, e.g. "64:5|3,3,A,2,0". Stable across versions.
std::string canonical_string(const Architecture& arch);
std::uint64_t arch_hash(const Architecture& arch);
/// Hex of arch_hash; used as the architecture id in every artifact.
std::string arch_id(const Architecture& arch);

// ---------------------------------------------------------------------------
// Genome
// ---------------------------------------------------------------------------

inline constexpr std::size_t kMaxBlocks = 5;
inline constexpr std::size_t kStemSlots = 3;   // oc0, ks0, M
inline constexpr std::size_t kBlockSlots = 5;  // r, b, ct, wf, st
inline constexpr std::size_t kGenomeLength = kStemSlots + kMaxBlocks * kBlockSlots;
inline constexpr double kGenomeSentinel = -1.0;

using Genome = std::array<double, kGenomeLength>;

Genome encode(const Architecture& arch);
/// Slots are rounded to the nearest integer before range checks. Absent blocks
/// must be padded with kGenomeSentinel; throws InvalidGenome with the slot.
Architecture decode(std::span<const double> genome, const SearchSpace& space = {});

// ---------------------------------------------------------------------------
// Layer inventory and static accounting
// ---------------------------------------------------------------------------

enum class LayerRole : std::uint8_t { kStem, kBranch, kReduce, kExpand, kProjection, kClassifier };

struct Layer {
  LayerRole role = LayerRole::kBranch;
  int in = 0;
  int out = 0;
  int kernel = 1;  // 1 for the classifier
  int stride = 1;
  bool is_dense() const noexcept { return role == LayerRole::kClassifier; }
};

/// Every weight-bearing layer in forward order, classifier last.
std::vector<Layer> build_layers(const Architecture& arch, const InputShape& input = {}, int num_classes = 10);

/// What param_count includes besides convolution and dense weights.
struct CountPolicy {
  bool batchnorm = true;         // 2 per output channel of every convolution
  bool classifier_bias = true;

  /// Crossbar-resident weights only: BN folded away and digital bias.
  static constexpr CountPolicy weights_only() { return {false, false}; }
};

std::int64_t param_count(std::span<const Layer> layers, CountPolicy policy = {});
std::int64_t param_count(const Architecture& arch, const InputShape& input = {}, int num_classes = 10,
                         CountPolicy policy = {});

/// Weight layers excluding 1x1 shortcut projections: stem, every branch,
/// reduce and expand convolution, and the classifier.
int depth(std::span<const Layer> layers);
int depth(const Architecture& arch);

struct LayerMatrix {
  std::int64_t rows = 1;  // in * k * k (conv) or in_features (dense)
  std::int64_t cols = 1;
  std::int64_t count = 1;
  friend bool operator==(const LayerMatrix&, const LayerMatrix&) = default;
};

std::vector<LayerMatrix> layer_matrices(std::span<const Layer> layers);
std::vector<LayerMatrix> layer_matrices(const Architecture& arch, const InputShape& input = {}, int num_classes = 10);

/// Layers never share a tile. Column-differential doubles the columns of each
/// layer; tile-differential doubles the tile total instead.
std::int64_t tile_count(std::span<const LayerMatrix> layers, std::int64_t tile_size, TileMapping mapping);

/// Occupied cells over allocated cells, in (0, 1].
double tile_utilization(std::span<const LayerMatrix> layers, std::int64_t tile_size, TileMapping mapping);

double mean_widening_factor(const Architecture& arch) noexcept;
double mean_branches(const Architecture& arch) noexcept;
int total_branches(const Architecture& arch) noexcept;

// ---------------------------------------------------------------------------
// Reference architectures
// ---------------------------------------------------------------------------

struct NamedArchitecture {
  std::string name;
  std::string task;
  Architecture arch;
};

/// The nine published final architectures, in table order.
const std::vector<NamedArchitecture>& published_architectures();
/// Looks up a published architecture by name, e.g. "cifar10/AnalogNAS_T500".
const Architecture& published(std::string_view task_and_name);

/// Standard 16-channel CIFAR ResNet-32 with projection shortcuts. Under
/// CountPolicy::weights_only() on (3,32,32)/10 it holds 464,432 weights and
/// maps onto 43 tiles of 512x512 with column-differential mapping.
Architecture resnet32_reference();

}  // namespace imcnas::arch
