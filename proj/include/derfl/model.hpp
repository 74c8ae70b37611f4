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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "derfl/data.hpp"

namespace derfl {

enum class ModelKind { kLinear, kMlp };

std::string_view ToString(ModelKind kind);
ModelKind ParseModelKind(std::string_view text);

struct ModelSpec {
  ModelKind kind = ModelKind::kLinear;
  std::size_t input_dim = 1;
  std::size_t hidden_dim = 0;  // mlp only
  std::size_t horizon = 1;

  // linear: h*d + h; mlp: m*d + m + h*m + h.
  std::size_t ParamCount() const;
  // Throws ConfigError.
  void Validate() const;

  bool operator==(const ModelSpec&) const = default;
};

// The unit of federated exchange. Layout of `values`:
//   linear: W[h x d] row-major, then b[h]
//   mlp:    W1[m x d], b1[m], W2[h x m], b2[h]
struct ModelParams {
  ModelSpec spec;
  std::vector<double> values;

  bool operator==(const ModelParams&) const = default;
};

// Structured view of the flat layout.
struct LayerWeights {
  std::vector<double> w1;  // linear: W
  std::vector<double> b1;  // linear: b
  std::vector<double> w2;  // mlp only
  std::vector<double> b2;  // mlp only

  bool operator==(const LayerWeights&) const = default;
};

LayerWeights Unflatten(const ModelParams& params);
ModelParams Flatten(const ModelSpec& spec, const LayerWeights& layers);

// Biases zero; weights uniform in [-s, s], s = sqrt(6 / (fan_in + fan_out)).
ModelParams InitParams(const ModelSpec& spec, std::uint64_t seed);

// Throws ShapeError when the parameter vector does not match its spec.
void CheckParams(const ModelParams& params);

std::vector<double> Predict(const ModelParams& params, std::span<const double> x);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Mean squared error over samples and horizon, with its exact gradient.
LossAndGrad ComputeLossAndGrad(const ModelParams& params, const SupervisedSet& batch);
LossAndGrad ComputeLossAndGrad(const ModelParams& params, const SupervisedSet& set,
                               std::span<const std::size_t> rows);
double ComputeLoss(const ModelParams& params, const SupervisedSet& set);

// Scaled-space predictions for every row, n x horizon row-major.
std::vector<double> PredictAll(const ModelParams& params, const SupervisedSet& set);

// Wire format: a fixed 32-byte header followed by the values as little-endian
// IEEE-754 doubles.
//   bytes 0-3   magic "DFLP"
//   bytes 4-7   u32 format version (1)
//   bytes 8-11  u32 kind (0 linear, 1 mlp)
//   bytes 12-15 u32 input_dim
//   bytes 16-19 u32 hidden_dim
//   bytes 20-23 u32 horizon
//   bytes 24-31 u64 value count
constexpr std::size_t kParamHeaderBytes = 32;

std::uint64_t ParamBytes(std::size_t param_count,
                         std::size_t header_bytes = kParamHeaderBytes);
std::uint64_t ParamBytes(const ModelSpec& spec);

std::vector<std::uint8_t> SerializeParams(const ModelParams& params);
ModelParams DeserializeParams(std::span<const std::uint8_t> blob);

double L2Norm(std::span<const double> v);
bool AllFinite(std::span<const double> v);

}  // namespace derfl
