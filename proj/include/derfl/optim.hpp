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

#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace derfl {

enum class OptimizerKind { kSgd, kMomentum };

std::string_view ToString(OptimizerKind kind);
OptimizerKind ParseOptimizerKind(std::string_view text);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgd;
  double lr = 0.01;
  double beta = 0.9;  // momentum only

  void Validate() const;
};

// Heavy-ball momentum state. Velocity is zero at construction and is never
// carried between federated rounds.
struct OptimizerState {
  OptimizerConfig config;
  std::vector<double> velocity;  // empty for plain SGD

  static OptimizerState Fresh(const OptimizerConfig& config, std::size_t param_count);
};

// p' = p - lr * g
std::vector<double> SgdStep(std::span<const double> params, std::span<const double> grad,
                            double lr);

// v' = beta * v + g;  p' = p - lr * v'
std::pair<std::vector<double>, OptimizerState> MomentumStep(
    const OptimizerState& state, std::span<const double> params,
    std::span<const double> grad);

// Dispatches on the configured kind, updating params and state in place.
void ApplyStep(OptimizerState& state, std::vector<double>& params,
               std::span<const double> grad);

}  // namespace derfl
