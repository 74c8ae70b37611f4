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
#include <vector>

#include "derfl/fedcore.hpp"

namespace derfl::detail {

// Local training plus the optional clip-and-noise step. Throws NumericError
// when the client returns non-finite values.
ClientUpdate TrainParticipant(const Client& client, const ModelParams& broadcast,
                              const FLConfig& config, std::uint64_t round_seed,
                              int cluster_id, const RunOptions& options,
                              int round_index);

// FedAvg within each cluster id in [0, models.size()); clusters without
// updates keep their previous parameters.
void AggregatePerCluster(std::vector<ModelParams>& models,
                         const std::vector<ClientUpdate>& updates);

// Model index each client evaluates with under the current state.
int ModelIndexFor(const ServerState& state, const Client& client, FlMode mode);

// Fills the val loss, byte meters, cluster snapshot and per-client losses,
// and evaluates every client when the round calls for it.
void FinishReport(RoundReport& report, const ServerState& state,
                  std::span<const Client> clients,
                  const std::vector<std::size_t>& participants,
                  const std::vector<ClientUpdate>& updates, std::size_t models_broadcast,
                  const FLConfig& config, int round_index, FlMode mode);

}  // namespace derfl::detail
