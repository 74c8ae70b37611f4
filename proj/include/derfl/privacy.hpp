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
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace derfl {

// Update-level Gaussian mechanism: deltas are clipped to L2 norm `clip_norm`
// and perturbed with N(0, (sigma * clip_norm)^2) per coordinate.
struct DpConfig {
  double clip_norm = std::numeric_limits<double>::infinity();
  double sigma = 0.0;
  std::string stream_label = "dp";

  double NoiseStddev() const { return sigma == 0.0 ? 0.0 : sigma * clip_norm; }
  // Throws ConfigError. A positive sigma needs a finite clip norm.
  void Validate() const;
};

// Scales `delta` down to norm `clip_norm` when it is longer. Throws
// NumericError on non-finite input and ConfigError when clip_norm <= 0.
std::vector<double> ClipUpdate(std::span<const double> delta, double clip_norm);

// Seed of the noise stream for one (round, client) pair.
std::uint64_t NoiseSeed(std::uint64_t round_seed, std::string_view client_id,
                        std::string_view stream_label = "dp");

// Adds i.i.d. N(0, stddev^2). stddev == 0 returns the input unchanged.
std::vector<double> AddGaussianNoise(std::span<const double> delta, double stddev,
                                     std::uint64_t round_seed,
                                     std::string_view client_id,
                                     std::string_view stream_label = "dp");

// Applies clip-then-noise to the update delta (new - broadcast) and returns
// the reconstructed parameters broadcast + privatized delta. When neither
// step changes the delta the client's parameters are returned untouched.
std::vector<double> PrivatizeParams(std::span<const double> broadcast,
                                    std::span<const double> updated,
                                    const DpConfig& config, std::uint64_t round_seed,
                                    std::string_view client_id);

}  // namespace derfl
