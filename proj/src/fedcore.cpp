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

#include "derfl/fedcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "derfl/errors.hpp"
#include "derfl/rng.hpp"
#include "round_common.hpp"

namespace derfl {

void FLConfig::Validate() const {
  if (rounds < 1) throw ConfigError("fl.rounds must be >= 1");
  if (local_epochs < 0) throw ConfigError("fl.local_epochs must be >= 0");
  if (!(participation > 0.0 && participation <= 1.0)) {
    throw ConfigError("fl.participation must be in (0, 1]");
  }
  if (early_stop_patience < 0) throw ConfigError("fl.early_stop_patience must be >= 0");
  if (all_client_eval_every < 1) throw ConfigError("fl.all_client_eval_every must be >= 1");
  try {
    optimizer.Validate();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("fl.{}", e.what()));
  }
}

std::uint64_t RoundSeed(std::uint64_t master_seed, int round_index) {
  return DeriveSeed(master_seed, "round", {}, round_index);
}

std::vector<std::size_t> BatchOrder(std::size_t n, std::uint64_t round_seed,
                                    std::string_view client_id, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Engine engine(DeriveSeed(round_seed, "batch", client_id, epoch));
  std::shuffle(order.begin(), order.end(), engine);
  return order;
}

ClientUpdate LocalUpdate(std::string_view client_id, const SupervisedSet& train,
                         const ModelParams& broadcast, const FLConfig& config,
                         std::uint64_t round_seed) {
  if (train.empty()) {
    throw InsufficientDataError(fmt::format("client {} has no training samples", client_id));
  }
  CheckParams(broadcast);
  ClientUpdate update;
  update.client_id = std::string(client_id);
  update.n_samples = train.size();
  update.new_params = broadcast;
  if (config.local_epochs == 0) {
    update.train_loss = ComputeLoss(broadcast, train);
    return update;
  }

  std::vector<double>& params = update.new_params.values;
  OptimizerState state = OptimizerState::Fresh(config.optimizer, params.size());
  const std::size_t n = train.size();
  const bool full_batch = config.batch_size == 0 || config.batch_size >= n;
  std::vector<std::size_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});

  for (int epoch = 0; epoch < config.local_epochs; ++epoch) {
    double weighted_loss = 0.0;
    if (full_batch) {
      LossAndGrad lg = ComputeLossAndGrad(update.new_params, train, all_rows);
      weighted_loss = lg.loss * static_cast<double>(n);
      ApplyStep(state, params, lg.grad);
    } else {
      std::vector<std::size_t> order = BatchOrder(n, round_seed, client_id, epoch);
      for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
        const std::size_t end = std::min(n, begin + config.batch_size);
        std::span<const std::size_t> rows(order.data() + begin, end - begin);
        LossAndGrad lg = ComputeLossAndGrad(update.new_params, train, rows);
        weighted_loss += lg.loss * static_cast<double>(rows.size());
        ApplyStep(state, params, lg.grad);
      }
    }
    update.train_loss = weighted_loss / static_cast<double>(n);
  }
  return update;
}

ModelParams FedAvgAggregate(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw EmptyAggregationError("no client updates to aggregate");
  const ModelSpec& spec = updates.front().new_params.spec;
  std::vector<const ClientUpdate*> ordered;
  ordered.reserve(updates.size());
  std::uint64_t total = 0;
  for (const auto& u : updates) {
    if (!(u.new_params.spec == spec)) {
      throw ShapeError(fmt::format("update from {} has a different model spec", u.client_id));
    }
    CheckParams(u.new_params);
    if (u.n_samples == 0) {
      throw InsufficientDataError(fmt::format("update from {} has zero samples", u.client_id));
    }
    total += u.n_samples;
    ordered.push_back(&u);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const ClientUpdate* a, const ClientUpdate* b) { return a->client_id < b->client_id; });
  ModelParams out{spec, std::vector<double>(spec.ParamCount(), 0.0)};
  for (const ClientUpdate* u : ordered) {
    const double w = static_cast<double>(u->n_samples) / static_cast<double>(total);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      out.values[i] += w * u->new_params.values[i];
    }
  }
  return out;
}

FineTuneResult FineTune(const ModelParams& params, const SupervisedSet& train, int epochs,
                        double lr) {
  if (epochs < 0) throw ConfigError("fine-tune epochs must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("fine-tune lr must be > 0");
  if (train.empty()) throw InsufficientDataError("fine-tune needs training samples");
  FineTuneResult result{params, {}};
  if (epochs == 0) return result;
  double current = ComputeLoss(result.params, train);
  result.loss_trace.push_back(current);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    LossAndGrad lg = ComputeLossAndGrad(result.params, train);
    bool accepted = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      ModelParams candidate{result.params.spec, SgdStep(result.params.values, lg.grad, lr)};
      const double loss = ComputeLoss(candidate, train);
      if (loss <= current) {
        result.params = std::move(candidate);
        current = loss;
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    result.loss_trace.push_back(current);
    if (!accepted) break;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Client

ClientUpdate Client::Train(const ModelParams& broadcast, const FLConfig& config,
                           std::uint64_t round_seed, int cluster_id) const {
  ClientUpdate update = LocalUpdate(id(), data_.splits.train, broadcast, config, round_seed);
  update.cluster_id = cluster_id;
  return update;
}

double Client::TrainLoss(const ModelParams& params) const {
  return ComputeLoss(params, data_.splits.train);
}

double Client::ValidationLoss(const ModelParams& params) const {
  return ComputeLoss(params, data_.splits.val);
}

int Client::SelectCluster(std::span<const ModelParams> models) const {
  if (models.empty()) throw ConfigError("cluster selection needs at least one model");
  int best = 0;
  double best_loss = TrainLoss(models[0]);
  for (std::size_t j = 1; j < models.size(); ++j) {
    const double loss = TrainLoss(models[j]);
    if (loss < best_loss) {
      best_loss = loss;
      best = static_cast<int>(j);
    }
  }
  return best;
}

FineTuneResult Client::Personalize(const ModelParams& params, int epochs, double lr) const {
  return FineTune(params, data_.splits.train, epochs, lr);
}

TestForecast Client::Forecast(const ModelParams& params) const {
  const SupervisedSet& test = data_.splits.test;
  TestForecast out;
  out.client_id = id();
  out.feeder_id = feeder_id();
  out.flex_class = data_.flex_class;
  out.horizon = test.horizon;
  out.timestamps = test.sample_timestamps;
  out.predicted_kw = data_.scaling.value.Invert(PredictAll(params, test));
  out.actual_kw = data_.scaling.value.Invert(test.targets);
  return out;
}

// ---------------------------------------------------------------------------

std::string_view ToString(FlMode mode) {
  switch (mode) {
    case FlMode::kGlobal:
      return "global";
    case FlMode::kHc:
      return "hc";
    case FlMode::kIfca:
      return "ifca";
  }
  return "global";
}

FlMode ParseFlMode(std::string_view text) {
  if (text == "global") return FlMode::kGlobal;
  if (text == "hc") return FlMode::kHc;
  if (text == "ifca") return FlMode::kIfca;
  throw ConfigError(fmt::format("unknown cluster mode '{}'", text));
}

void ClusterConfig::Validate(FlMode mode) const {
  if (mode == FlMode::kHc) {
    if (!(tau > 0.0)) throw ConfigError("cluster.tau must be > 0 for hc");
    if (warmup_rounds < 0) throw ConfigError("cluster.warmup_rounds must be >= 0");
    if (recluster_every < 0) throw ConfigError("cluster.recluster_every must be >= 0");
  }
  if (mode == FlMode::kIfca && k < 1) throw ConfigError("cluster.k must be >= 1 for ifca");
}

std::uint64_t RunResult::TotalBytes() const {
  std::uint64_t total = 0;
  for (const auto& r : reports) total += r.bytes_up + r.bytes_down;
  return total;
}

const ModelParams& RunResult::ModelFor(const std::string& client_id) const {
  auto it = assignment.find(client_id);
  const int index = it == assignment.end() ? 0 : it->second;
  return models.at(static_cast<std::size_t>(index));
}

std::vector<std::size_t> SelectParticipants(std::size_t n_clients, double participation,
                                            std::uint64_t master_seed, int round_index) {
  if (n_clients == 0) throw InsufficientDataError("no clients to select from");
  auto count = static_cast<std::size_t>(
      std::ceil(participation * static_cast<double>(n_clients) - 1e-9));
  count = std::clamp<std::size_t>(count, 1, n_clients);
  std::vector<std::size_t> order(n_clients);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (count < n_clients) {
    Engine engine(DeriveSeed(master_seed, "participation", {}, round_index));
    std::shuffle(order.begin(), order.end(), engine);
    order.resize(count);
    std::sort(order.begin(), order.end());
  }
  return order;
}

std::uint64_t BytesDown(std::size_t participants, std::size_t models_broadcast,
                        std::uint64_t param_bytes) {
  return static_cast<std::uint64_t>(participants) * models_broadcast * param_bytes;
}

std::uint64_t BytesUp(std::size_t participants, std::uint64_t param_bytes) {
  return static_cast<std::uint64_t>(participants) * param_bytes;
}

ServerState InitServerState(const ModelSpec& spec, const FLConfig& config,
                            const RunOptions& options) {
  ServerState state;
  if (options.mode == FlMode::kIfca) {
    for (int j = 0; j < options.cluster.k; ++j) {
      state.models.push_back(InitParams(spec, DeriveSeed(config.seed, "ifca_init", {}, j)));
    }
  } else {
    state.models.push_back(InitParams(spec, DeriveSeed(config.seed, "init")));
  }
  return state;
}

RoundReport RunRound(ServerState& state, std::span<const Client> clients,
                     const FLConfig& config, int round_index, const RunOptions& options) {
  if (clients.empty()) throw InsufficientDataError("a round needs at least one client");
  if (state.models.size() != 1) throw ConfigError("global rounds need exactly one model");
  const std::uint64_t round_seed = RoundSeed(config.seed, round_index);
  const std::vector<std::size_t> participants =
      SelectParticipants(clients.size(), config.participation, config.seed, round_index);

  std::vector<ClientUpdate> updates;
  updates.reserve(participants.size());
  for (std::size_t idx : participants) {
    updates.push_back(detail::TrainParticipant(clients[idx], state.models[0], config,
                                               round_seed, -1, options, round_index));
  }
  state.models[0] = FedAvgAggregate(updates);

  RoundReport report;
  detail::FinishReport(report, state, clients, participants, updates, 1, config, round_index,
                       FlMode::kGlobal);
  return report;
}

std::vector<Client> MakeClients(std::vector<PreparedClient> prepared) {
  std::sort(prepared.begin(), prepared.end(),
            [](const PreparedClient& a, const PreparedClient& b) { return a.client_id < b.client_id; });
  for (std::size_t i = 1; i < prepared.size(); ++i) {
    if (prepared[i].client_id == prepared[i - 1].client_id) {
      throw ConfigError(fmt::format("duplicate client id {}", prepared[i].client_id));
    }
  }
  std::vector<Client> clients;
  clients.reserve(prepared.size());
  for (auto& p : prepared) clients.emplace_back(std::move(p));
  return clients;
}

// ---------------------------------------------------------------------------

namespace detail {

ClientUpdate TrainParticipant(const Client& client, const ModelParams& broadcast,
                              const FLConfig& config, std::uint64_t round_seed,
                              int cluster_id, const RunOptions& options,
                              int round_index) {
  ClientUpdate update = client.Train(broadcast, config, round_seed, cluster_id);
  if (!std::isfinite(update.train_loss) || !AllFinite(update.new_params.values)) {
    throw NumericError(fmt::format("non-finite local update from client {} in round {}",
                                   client.id(), round_index + 1));
  }
  if (options.dp) {
    update.new_params.values = PrivatizeParams(broadcast.values, update.new_params.values,
                                               *options.dp, round_seed, client.id());
  }
  return update;
}

void AggregatePerCluster(std::vector<ModelParams>& models,
                         const std::vector<ClientUpdate>& updates) {
  std::vector<std::vector<ClientUpdate>> per_cluster(models.size());
  for (const auto& u : updates) {
    const auto c = static_cast<std::size_t>(std::max(u.cluster_id, 0));
    if (c >= models.size()) throw ShapeError("update tagged with an unknown cluster");
    per_cluster[c].push_back(u);
  }
  for (std::size_t c = 0; c < models.size(); ++c) {
    if (!per_cluster[c].empty()) models[c] = FedAvgAggregate(per_cluster[c]);
  }
}

int ModelIndexFor(const ServerState& state, const Client& client, FlMode mode) {
  switch (mode) {
    case FlMode::kGlobal:
      return 0;
    case FlMode::kHc: {
      if (!state.clustered) return 0;
      return state.assignment.at(client.id());
    }
    case FlMode::kIfca:
      return client.SelectCluster(state.models);
  }
  return 0;
}

void FinishReport(RoundReport& report, const ServerState& state,
                  std::span<const Client> clients,
                  const std::vector<std::size_t>& participants,
                  const std::vector<ClientUpdate>& updates, std::size_t models_broadcast,
                  const FLConfig& config, int round_index, FlMode mode) {
  report.round = round_index + 1;
  double weighted = 0.0;
  double weight = 0.0;
  for (std::size_t i = 0; i < participants.size(); ++i) {
    const Client& client = clients[participants[i]];
    const ClientUpdate& update = updates[i];
    report.participants.push_back(client.id());
    report.client_train_loss[client.id()] = update.train_loss;
    const auto model = static_cast<std::size_t>(std::max(update.cluster_id, 0));
    const double w = static_cast<double>(client.val_size());
    weighted += w * client.ValidationLoss(state.models[model]);
    weight += w;
  }
  report.val_loss = weight > 0.0 ? weighted / weight : 0.0;

  const std::uint64_t param_bytes = ParamBytes(state.models.front().spec);
  report.bytes_up = BytesUp(participants.size(), param_bytes);
  report.bytes_down = BytesDown(participants.size(), models_broadcast, param_bytes);
  report.n_clusters = static_cast<int>(state.models.size());
  report.assignment = state.assignment;

  for (const auto& m : state.models) {
    if (!AllFinite(m.values)) {
      throw NumericError(fmt::format("aggregated model became non-finite in round {}",
                                     round_index + 1));
    }
  }
  if (!std::isfinite(report.val_loss) || report.val_loss > 1e150) {
    throw NumericError(fmt::format("validation loss diverged ({}) in round {}",
                                   report.val_loss, round_index + 1));
  }

  const bool last = round_index + 1 == config.rounds;
  if (last || (round_index + 1) % config.all_client_eval_every == 0) {
    double all_weighted = 0.0;
    double all_weight = 0.0;
    for (const Client& client : clients) {
      const auto model = static_cast<std::size_t>(ModelIndexFor(state, client, mode));
      const double w = static_cast<double>(client.val_size());
      all_weighted += w * client.ValidationLoss(state.models[model]);
      all_weight += w;
    }
    report.all_client_val_loss = all_weight > 0.0 ? all_weighted / all_weight : 0.0;
  }
}

}  // namespace detail

}  // namespace derfl
