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

#include "derfl/privacy.hpp"

#include <cmath>

#include <fmt/format.h>

#include "derfl/errors.hpp"
#include "derfl/model.hpp"
#include "derfl/rng.hpp"

namespace derfl {

void DpConfig::Validate() const {
  if (!(clip_norm > 0.0)) throw ConfigError("dp.clip_norm must be > 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("dp.sigma must be >= 0");
  if (sigma > 0.0 && !std::isfinite(clip_norm)) {
    throw ConfigError("dp.sigma > 0 requires a finite dp.clip_norm");
  }
}

std::vector<double> ClipUpdate(std::span<const double> delta, double clip_norm) {
  if (!(clip_norm > 0.0)) throw ConfigError("clip norm must be > 0");
  if (!AllFinite(delta)) throw NumericError("cannot clip a non-finite update");
  std::vector<double> out(delta.begin(), delta.end());
  const double norm = L2Norm(delta);
  if (norm <= clip_norm) return out;
  const double scale = clip_norm / norm;
  for (double& v : out) v *= scale;
  return out;
}

std::uint64_t NoiseSeed(std::uint64_t round_seed, std::string_view client_id,
                        std::string_view stream_label) {
  return DeriveSeed(round_seed, stream_label, client_id);
}

std::vector<double> AddGaussianNoise(std::span<const double> delta, double stddev,
                                     std::uint64_t round_seed,
                                     std::string_view client_id,
                                     std::string_view stream_label) {
  std::vector<double> out(delta.begin(), delta.end());
  if (stddev == 0.0) return out;
  if (!(stddev > 0.0) || !std::isfinite(stddev)) {
    throw ConfigError(fmt::format("noise stddev must be finite and >= 0, got {}", stddev));
  }
  Rng rng(NoiseSeed(round_seed, client_id, stream_label));
  for (double& v : out) v += stddev * rng.Normal();
  return out;
}

std::vector<double> PrivatizeParams(std::span<const double> broadcast,
                                    std::span<const double> updated,
                                    const DpConfig& config, std::uint64_t round_seed,
                                    std::string_view client_id) {
  if (broadcast.size() != updated.size()) {
    throw ShapeError("privatize: broadcast and update lengths differ");
  }
  std::vector<double> delta(updated.size());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = updated[i] - broadcast[i];
  if (!AllFinite(delta)) throw NumericError("non-finite client update");
  const double stddev = config.NoiseStddev();
  if (stddev == 0.0 && L2Norm(delta) <= config.clip_norm) {
    return std::vector<double>(updated.begin(), updated.end());
  }
  std::vector<double> noisy = AddGaussianNoise(ClipUpdate(delta, config.clip_norm), stddev,
                                               round_seed, client_id, config.stream_label);
  std::vector<double> out(broadcast.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = broadcast[i] + noisy[i];
  return out;
}

}  // namespace derfl
