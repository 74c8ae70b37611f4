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

#include <chrono>
#include <limits>

#include <fmt/format.h>

#include "derfl/cluster.hpp"
#include "derfl/errors.hpp"
#include "derfl/fedcore.hpp"
#include "round_common.hpp"

namespace derfl {

RunResult RunTraining(std::span<const Client> clients, const ModelSpec& spec,
                      const FLConfig& config, const RunOptions& options) {
  config.Validate();
  spec.Validate();
  options.cluster.Validate(options.mode);
  if (options.dp) options.dp->Validate();
  if (clients.empty()) throw InsufficientDataError("training needs at least one client");
  for (std::size_t i = 1; i < clients.size(); ++i) {
    if (!(clients[i - 1].id() < clients[i].id())) {
      throw ConfigError("clients must be sorted by ascending, unique id");
    }
  }

  const auto started = std::chrono::steady_clock::now();
  RunResult result;
  result.mode = options.mode;
  result.config = config;
  result.options = options;
  result.seed = config.seed;

  ServerState state = InitServerState(spec, config, options);
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int round = 0; round < config.rounds; ++round) {
    RoundReport report;
    switch (options.mode) {
      case FlMode::kGlobal:
        report = RunRound(state, clients, config, round, options);
        break;
      case FlMode::kHc:
        report = HcRound(state, clients, config, round, options);
        break;
      case FlMode::kIfca:
        report = IfcaRound(state, clients, config, round, options);
        break;
    }
    const double val = report.val_loss;
    result.reports.push_back(std::move(report));
    if (val <= best - kEarlyStopMinImprovement) {
      best = val;
      result.best_round = round + 1;
      stale = 0;
    } else {
      ++stale;
    }
    if (config.early_stop_patience > 0 && stale >= config.early_stop_patience) break;
  }

  RoundReport& last = result.reports.back();
  result.models = state.models;
  for (const Client& client : clients) {
    result.assignment[client.id()] = detail::ModelIndexFor(state, client, options.mode);
  }
  if (!last.all_client_val_loss) {
    double weighted = 0.0;
    double weight = 0.0;
    for (const Client& client : clients) {
      const double w = static_cast<double>(client.val_size());
      weighted += w * client.ValidationLoss(result.ModelFor(client.id()));
      weight += w;
    }
    last.all_client_val_loss = weight > 0.0 ? weighted / weight : 0.0;
  }
  result.best_val_loss = best;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace derfl
