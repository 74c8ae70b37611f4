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

#include "derfl/optim.hpp"

#include <cmath>

#include <fmt/format.h>

#include "derfl/errors.hpp"

namespace derfl {

std::string_view ToString(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "momentum";
}

OptimizerKind ParseOptimizerKind(std::string_view text) {
  if (text == "sgd") return OptimizerKind::kSgd;
  if (text == "momentum") return OptimizerKind::kMomentum;
  throw ConfigError(fmt::format("unknown optimizer '{}'", text));
}

void OptimizerConfig::Validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("optimizer lr must be > 0");
  if (kind == OptimizerKind::kMomentum && !(beta >= 0.0 && beta < 1.0)) {
    throw ConfigError("optimizer beta must be in [0, 1)");
  }
}

OptimizerState OptimizerState::Fresh(const OptimizerConfig& config,
                                     std::size_t param_count) {
  OptimizerState state{config, {}};
  if (config.kind == OptimizerKind::kMomentum) state.velocity.assign(param_count, 0.0);
  return state;
}

std::vector<double> SgdStep(std::span<const double> params, std::span<const double> grad,
                            double lr) {
  if (params.size() != grad.size()) {
    throw ShapeError(fmt::format("sgd step: {} params vs {} gradient entries",
                                 params.size(), grad.size()));
  }
  std::vector<double> out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) out[i] = params[i] - lr * grad[i];
  return out;
}

std::pair<std::vector<double>, OptimizerState> MomentumStep(
    const OptimizerState& state, std::span<const double> params,
    std::span<const double> grad) {
  if (params.size() != grad.size() || state.velocity.size() != params.size()) {
    throw ShapeError(fmt::format(
        "momentum step: {} params, {} gradient entries, {} velocity entries",
        params.size(), grad.size(), state.velocity.size()));
  }
  OptimizerState next = state;
  std::vector<double> out(params.size());
  const double beta = state.config.beta;
  const double lr = state.config.lr;
  for (std::size_t i = 0; i < params.size(); ++i) {
    next.velocity[i] = beta * state.velocity[i] + grad[i];
    out[i] = params[i] - lr * next.velocity[i];
  }
  return {std::move(out), std::move(next)};
}

void ApplyStep(OptimizerState& state, std::vector<double>& params,
               std::span<const double> grad) {
  if (state.config.kind == OptimizerKind::kSgd) {
    params = SgdStep(params, grad, state.config.lr);
    return;
  }
  auto [next_params, next_state] = MomentumStep(state, params, grad);
  params = std::move(next_params);
  state = std::move(next_state);
}

}  // namespace derfl
