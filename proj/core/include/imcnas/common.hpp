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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace imcnas {

/// Version tag written into every JSON artifact this library emits.
inline constexpr int kSchemaVersion = 1;

using Rng = std::mt19937_64;

/// How signed weights are laid out on crossbars: G+ and G- on alternate
/// columns of one tile, or on two separate tiles.
enum class TileMapping { kColumnDifferential, kTileDifferential };

std::string_view to_string(TileMapping m) noexcept;
/// Accepts "column-differential" / "tile-differential".
TileMapping parse_tile_mapping(std::string_view s);

// ---------------------------------------------------------------------------
// Error types. Every failure surfaced by the library derives from Error so the
// CLI can map families of failures onto exit codes.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGenome : public Error {
 public:
  InvalidGenome(std::size_t slot, const std::string& what)
      : Error("invalid genome slot " + std::to_string(slot) + ": " + what), slot_(slot) {}
  std::size_t slot() const noexcept { return slot_; }

 private:
  std::size_t slot_;
};

class InvalidArchitecture : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidTime : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  EvalError(std::string arch_id, const std::string& what)
      : Error("evaluation of " + arch_id + " failed: " + what), arch_id_(std::move(arch_id)) {}
  const std::string& arch_id() const noexcept { return arch_id_; }

 private:
  std::string arch_id_;
};

class TrainError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class InfeasibleSearch : public Error {
 public:
  using Error::Error;
};

class SubspaceTooLarge : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error("config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// ---------------------------------------------------------------------------
// Seed derivation. Child seeds are a pure function of (root, path) so that
// parallel work items draw from the same streams regardless of scheduling.
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) noexcept;

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) noexcept;

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

std::string to_hex(std::uint64_t v);

/// Runs body(i) for i in [0, n) on up to `workers` threads. Iterations must be
/// independent; results are only deterministic if body writes to slot i alone.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& body);

}  // namespace imcnas
