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

#include "derfl/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "derfl/errors.hpp"
#include "round_common.hpp"

namespace derfl {

ClusterAssignment HcPartition(const std::map<std::string, std::vector<double>>& deltas,
                              double tau) {
  if (deltas.empty()) throw InsufficientDataError("hc partition needs at least one client");
  const std::size_t dim = deltas.begin()->second.size();
  std::vector<const std::string*> ids;
  std::vector<const std::vector<double>*> points;
  for (const auto& [id, v] : deltas) {
    if (v.size() != dim) {
      throw ShapeError(fmt::format("delta of client {} has {} values, expected {}", id,
                                   v.size(), dim));
    }
    ids.push_back(&id);
    points.push_back(&v);
  }
  const std::size_t n = ids.size();

  // Cluster-to-cluster average-linkage distances, maintained with the
  // Lance-Williams update. Slot i holds the cluster whose smallest member is
  // client i (map order is ascending id), so merging j into i < j keeps that.
  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double sq = 0.0;
      for (std::size_t c = 0; c < dim; ++c) {
        const double d = (*points[i])[c] - (*points[j])[c];
        sq += d * d;
      }
      dist[i][j] = dist[j][i] = std::sqrt(sq);
    }
  }
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> alive(n, true);
  std::vector<std::size_t> owner(n);
  for (std::size_t i = 0; i < n; ++i) owner[i] = i;

  while (true) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (alive[j] && dist[i][j] < best) {
          best = dist[i][j];
          bi = i;
          bj = j;
        }
      }
    }
    if (!(best <= tau)) break;
    for (std::size_t k = 0; k < n; ++k) {
      if (!alive[k] || k == bi || k == bj) continue;
      const double merged = (static_cast<double>(size[bi]) * dist[bi][k] +
                             static_cast<double>(size[bj]) * dist[bj][k]) /
                            static_cast<double>(size[bi] + size[bj]);
      dist[bi][k] = dist[k][bi] = merged;
    }
    size[bi] += size[bj];
    alive[bj] = false;
    for (std::size_t k = 0; k < n; ++k) {
      if (owner[k] == bj) owner[k] = bi;
    }
  }

  ClusterAssignment out;
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (alive[i]) label[i] = next++;
  }
  for (std::size_t i = 0; i < n; ++i) out.clusters[*ids[i]] = label[owner[i]];
  out.k = next;
  return out;
}

int IfcaAssign(const SupervisedSet& train, std::span<const ModelParams> models) {
  if (models.empty()) throw ConfigError("ifca assignment needs k >= 1 models");
  if (train.empty()) throw InsufficientDataError("ifca assignment needs training samples");
  int best = 0;
  double best_loss = ComputeLoss(models[0], train);
  for (std::size_t j = 1; j < models.size(); ++j) {
    const double loss = ComputeLoss(models[j], train);
    if (loss < best_loss) {
      best_loss = loss;
      best = static_cast<int>(j);
    }
  }
  return best;
}

bool SamePartition(const std::map<std::string, int>& a, const std::map<std::string, int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> forward;
  std::map<int, int> backward;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
    auto f = forward.emplace(ia->second, ib->second).first;
    auto r = backward.emplace(ib->second, ia->second).first;
    if (f->second != ib->second || r->second != ia->second) return false;
  }
  return true;
}

bool IsHcClusteringRound(const ClusterConfig& cluster, int round_index) {
  if (round_index < cluster.warmup_rounds) return false;
  const int since = round_index - cluster.warmup_rounds;
  if (since == 0) return true;
  return cluster.recluster_every > 0 && since % cluster.recluster_every == 0;
}

RoundReport HcRound(ServerState& state, std::span<const Client> clients,
                    const FLConfig& config, int round_index, const RunOptions& options) {
  if (clients.empty()) throw InsufficientDataError("a round needs at least one client");
  if (!IsHcClusteringRound(options.cluster, round_index)) {
    if (!state.clustered) return RunRound(state, clients, config, round_index, options);
  }
  const std::uint64_t round_seed = RoundSeed(config.seed, round_index);
  auto model_index = [&](const Client& c) {
    return state.clustered ? state.assignment.at(c.id()) : 0;
  };

  std::vector<std::size_t> participants;
  std::vector<ClientUpdate> updates;
  if (IsHcClusteringRound(options.cluster, round_index)) {
    // Every client reports so the partition covers the whole population.
    std::map<std::string, std::vector<double>> deltas;
    for (std::size_t i = 0; i < clients.size(); ++i) {
      participants.push_back(i);
      const int m = model_index(clients[i]);
      const ModelParams& broadcast = state.models[static_cast<std::size_t>(m)];
      updates.push_back(detail::TrainParticipant(clients[i], broadcast, config, round_seed, m,
                                                 options, round_index));
      std::vector<double> delta(broadcast.values.size());
      for (std::size_t p = 0; p < delta.size(); ++p) {
        delta[p] = updates.back().new_params.values[p] - broadcast.values[p];
      }
      deltas.emplace(clients[i].id(), std::move(delta));
    }
    ClusterAssignment partition = HcPartition(deltas, options.cluster.tau);
    for (auto& u : updates) u.cluster_id = partition.clusters.at(u.client_id);
    std::vector<ModelParams> fresh(static_cast<std::size_t>(partition.k),
                                   state.models.front());
    detail::AggregatePerCluster(fresh, updates);
    state.models = std::move(fresh);
    state.assignment = partition.clusters;
    state.clustered = true;
  } else {
    participants =
        SelectParticipants(clients.size(), config.participation, config.seed, round_index);
    for (std::size_t idx : participants) {
      const int m = model_index(clients[idx]);
      updates.push_back(detail::TrainParticipant(clients[idx],
                                                 state.models[static_cast<std::size_t>(m)],
                                                 config, round_seed, m, options, round_index));
    }
    detail::AggregatePerCluster(state.models, updates);
  }

  RoundReport report;
  detail::FinishReport(report, state, clients, participants, updates, 1, config, round_index,
                       FlMode::kHc);
  return report;
}

RoundReport IfcaRound(ServerState& state, std::span<const Client> clients,
                      const FLConfig& config, int round_index, const RunOptions& options) {
  if (clients.empty()) throw InsufficientDataError("a round needs at least one client");
  if (state.models.empty()) throw ConfigError("ifca needs k >= 1 models");
  const std::uint64_t round_seed = RoundSeed(config.seed, round_index);
  const std::vector<std::size_t> participants =
      SelectParticipants(clients.size(), config.participation, config.seed, round_index);

  std::vector<ClientUpdate> updates;
  updates.reserve(participants.size());
  for (std::size_t idx : participants) {
    const Client& client = clients[idx];
    const int choice = client.SelectCluster(state.models);
    updates.push_back(detail::TrainParticipant(client,
                                               state.models[static_cast<std::size_t>(choice)],
                                               config, round_seed, choice, options, round_index));
    state.assignment[client.id()] = choice;
  }
  detail::AggregatePerCluster(state.models, updates);

  RoundReport report;
  detail::FinishReport(report, state, clients, participants, updates, state.models.size(),
                       config, round_index, FlMode::kIfca);
  return report;
}

}  // namespace derfl
