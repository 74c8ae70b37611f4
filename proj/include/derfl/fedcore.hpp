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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "derfl/data.hpp"
#include "derfl/model.hpp"
#include "derfl/optim.hpp"
#include "derfl/privacy.hpp"

namespace derfl {

struct FLConfig {
  int rounds = 50;
  int local_epochs = 1;
  std::size_t batch_size = 0;  // 0 = full batch
  double participation = 1.0;
  OptimizerConfig optimizer;
  int early_stop_patience = 0;  // 0 = off
  std::uint64_t seed = 0;
  // Every N rounds (and after the last one) all clients are evaluated, not
  // just the round's participants.
  int all_client_eval_every = 10;

  void Validate() const;
};

// Early stopping counts a round as progress only if it lowers the best
// validation loss by at least this much.
constexpr double kEarlyStopMinImprovement = 1e-6;

// What a client sends back to the server. It carries parameters only.
struct ClientUpdate {
  std::string client_id;
  ModelParams new_params;
  std::size_t n_samples = 0;
  int cluster_id = -1;
  double train_loss = 0.0;
};

std::uint64_t RoundSeed(std::uint64_t master_seed, int round_index);

// Mini-batch visiting order for one epoch, derived from (round_seed,
// client_id, epoch).
std::vector<std::size_t> BatchOrder(std::size_t n, std::uint64_t round_seed,
                                    std::string_view client_id, int epoch);

// E epochs of (mini-)batch optimization from `broadcast`; optimizer state
// starts fresh. train_loss is the sample-weighted mean batch loss of the last
// epoch (the broadcast model's train loss when E = 0).
ClientUpdate LocalUpdate(std::string_view client_id, const SupervisedSet& train,
                         const ModelParams& broadcast, const FLConfig& config,
                         std::uint64_t round_seed);

// Coordinate-wise mean weighted by n_samples, summed in ascending client_id
// order.
ModelParams FedAvgAggregate(std::span<const ClientUpdate> updates);

struct FineTuneResult {
  ModelParams params;
  std::vector<double> loss_trace;  // train loss before epoch 1 and after each epoch
};

// Full-batch gradient descent with backtracking: a step that would raise the
// training loss is retried with half the learning rate (up to 40 times), and
// the reduced rate is kept for later epochs. Training loss never increases.
FineTuneResult FineTune(const ModelParams& params, const SupervisedSet& train,
                        int epochs, double lr);

// Test-split forecasts in physical units.
struct TestForecast {
  std::string client_id;
  std::string feeder_id;
  FlexClass flex_class = FlexClass::kNonInterruptible;
  std::size_t horizon = 1;
  std::vector<std::int64_t> timestamps;  // target start per row
  std::vector<double> predicted_kw;      // rows x horizon
  std::vector<double> actual_kw;
};

// Client-side context. Its training data never leaves the object: callers
// receive ClientUpdate values, losses and forecasts.
class Client {
 public:
  explicit Client(PreparedClient data) : data_(std::move(data)) {}

  const std::string& id() const { return data_.client_id; }
  const std::string& feeder_id() const { return data_.feeder_id; }
  int archetype_id() const { return data_.archetype_id; }
  std::size_t train_size() const { return data_.splits.train.size(); }
  std::size_t val_size() const { return data_.splits.val.size(); }
  std::size_t test_size() const { return data_.splits.test.size(); }

  ClientUpdate Train(const ModelParams& broadcast, const FLConfig& config,
                     std::uint64_t round_seed, int cluster_id = -1) const;
  double TrainLoss(const ModelParams& params) const;
  double ValidationLoss(const ModelParams& params) const;
  // Index of the model with the lowest training loss; ties go to the lowest
  // index.
  int SelectCluster(std::span<const ModelParams> models) const;
  FineTuneResult Personalize(const ModelParams& params, int epochs, double lr) const;
  TestForecast Forecast(const ModelParams& params) const;

 private:
  PreparedClient data_;
};

enum class FlMode { kGlobal, kHc, kIfca };

std::string_view ToString(FlMode mode);
FlMode ParseFlMode(std::string_view text);

struct ClusterConfig {
  double tau = 1.0;          // hc merge threshold
  int warmup_rounds = 5;     // hc: global FedAvg rounds before clustering
  int k = 2;                 // ifca model count
  int recluster_every = 0;   // hc: 0 = one-shot

  void Validate(FlMode mode) const;
};

struct RunOptions {
  FlMode mode = FlMode::kGlobal;
  ClusterConfig cluster;
  std::optional<DpConfig> dp;
};

struct ServerState {
  std::vector<ModelParams> models;       // 1 until hc clusters; k for ifca
  std::map<std::string, int> assignment;  // last known cluster per client
  bool clustered = false;                 // hc only
};

struct RoundReport {
  int round = 0;  // 1-based
  std::vector<std::string> participants;
  std::map<std::string, double> client_train_loss;
  double val_loss = 0.0;  // val-sample-weighted over participants
  std::optional<double> all_client_val_loss;
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;
  int n_clusters = 1;
  std::map<std::string, int> assignment;
};

struct RunResult {
  FlMode mode = FlMode::kGlobal;
  std::vector<ModelParams> models;
  std::map<std::string, int> assignment;  // every client -> model index
  std::vector<RoundReport> reports;
  FLConfig config;
  RunOptions options;
  std::uint64_t seed = 0;
  int best_round = 0;
  double best_val_loss = 0.0;
  double wall_seconds = 0.0;  // not serialized

  std::uint64_t TotalBytes() const;
  const ModelParams& ModelFor(const std::string& client_id) const;
};

// ceil(P * N) clients, drawn without replacement by a deterministic shuffle
// of the ascending ids; returned in ascending id order.
std::vector<std::size_t> SelectParticipants(std::size_t n_clients, double participation,
                                            std::uint64_t master_seed, int round_index);

// Closed-form meters: down = participants x models_broadcast x param_bytes,
// up = participants x param_bytes.
std::uint64_t BytesDown(std::size_t participants, std::size_t models_broadcast,
                        std::uint64_t param_bytes);
std::uint64_t BytesUp(std::size_t participants, std::uint64_t param_bytes);

// Initial server state for a mode (ifca: k independent draws).
ServerState InitServerState(const ModelSpec& spec, const FLConfig& config,
                            const RunOptions& options);

// One global FedAvg round. `clients` must be sorted by ascending id.
RoundReport RunRound(ServerState& state, std::span<const Client> clients,
                     const FLConfig& config, int round_index, const RunOptions& options);

// Up to `config.rounds` rounds of the requested mode with early stopping.
RunResult RunTraining(std::span<const Client> clients, const ModelSpec& spec,
                      const FLConfig& config, const RunOptions& options);

// Sorts clients by ascending id; rejects duplicates.
std::vector<Client> MakeClients(std::vector<PreparedClient> prepared);

}  // namespace derfl
