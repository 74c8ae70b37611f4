// Copyright 2026 The derfl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace derfl {

// Child seeds are derived as a stable hash of (master, label, client, round):
// FNV-1a 64 over the label and client strings, folded through the SplitMix64
// finalizer together with the master seed and round index. The hash is fixed
// for this implementation so every run of one build is reproducible.
std::uint64_t Fnv1a64(std::string_view text);
std::uint64_t SplitMix64(std::uint64_t x);

constexpr std::int64_t kNoRound = -1;

std::uint64_t DeriveSeed(std::uint64_t master, std::string_view label,
                         std::string_view client_id = {},
                         std::int64_t round = kNoRound);

// Engine type used for every random stream in the library.
using Engine = std::mt19937_64;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double Uniform() { return unit_(engine_); }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  double Normal() { return normal_(engine_); }

  Engine& engine() { return engine_; }

 private:
  Engine engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace derfl
