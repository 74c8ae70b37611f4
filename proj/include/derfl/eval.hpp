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
#include "derfl/fedcore.hpp"

namespace derfl {

// Forecast error metrics in physical units.
struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> mape;   // percent; absent when every actual is ~0
  std::optional<double> nrmse;  // rmse / mean |actual|; absent when that is ~0
  std::size_t excluded_points = 0;  // |actual| < 1e-8, left out of MAPE
  std::size_t n_points = 0;
};

constexpr double kMapeZeroThreshold = 1e-8;

Metrics ComputeMetrics(std::span<const double> predicted, std::span<const double> actual);

struct ClientSeries {
  std::string client_id;
  std::string feeder_id;
  TimeSeries predicted;
  TimeSeries actual;
};

struct FeederSeries {
  std::vector<std::string> members;
  TimeSeries predicted;
  TimeSeries actual;
};

// Pointwise sums of member predictions and actuals per feeder. Members of one
// feeder must share start, step and length, or AlignmentError is thrown.
std::map<std::string, FeederSeries> AggregateForecast(std::span<const ClientSeries> series);

struct FlexBand {
  TimeSeries p_min;
  TimeSeries p_max;
};

// non_interruptible: [f, f]; curtailable: [(1-a) f, f]; shiftable:
// [(1-a) f, (1+a) f]. Throws ConfigError unless 0 <= alpha <= 1.
FlexBand FlexibilityBand(const TimeSeries& forecast, FlexClass flex_class, double alpha);

// ---------------------------------------------------------------------------
// Comparison harness.

enum class Method {
  kLocalOnly,
  kCentralized,
  kFedavg,
  kFedavgPersonalized,
  kHc,
  kHcPersonalized,
  kIfca,
  kIfcaPersonalized,
};

std::string_view ToString(Method method);
Method ParseMethod(std::string_view text);
std::vector<Method> AllMethods();

enum class ScalingMode { kPerClient, kPooled };

std::string_view ToString(ScalingMode mode);
ScalingMode ParseScalingMode(std::string_view text);

struct PersonalizationConfig {
  int epochs = 5;
  double lr_scale = 0.1;  // fine-tune lr = lr_scale * fl.optimizer.lr
};

struct ComparisonConfig {
  ModelKind model_kind = ModelKind::kLinear;
  std::size_t hidden_dim = 16;
  std::size_t lag = 24;
  std::size_t horizon = 1;
  bool calendar_features = true;
  ScalingMode scaling = ScalingMode::kPerClient;
  FLConfig fl;
  ClusterConfig cluster;
  std::optional<DpConfig> dp;  // applied to the federated methods only
  PersonalizationConfig personalization;
  std::vector<Method> methods = AllMethods();
};

// Per-client metrics are summarized by their mean and median over clients;
// feeder metrics by their mean over feeders. MAPE/NRMSE summaries skip
// clients where they are absent.
struct MetricSummary {
  double mae = 0.0;
  double rmse = 0.0;
  std::optional<double> mape;
  std::optional<double> nrmse;
  std::size_t excluded_points = 0;
};

struct MethodRow {
  Method method = Method::kFedavg;
  MetricSummary client_mean;
  MetricSummary client_median;
  MetricSummary feeder_mean;
  std::vector<double> client_mae;  // ascending client id order
  // Federated rows: metered parameter traffic. centralized: raw series and
  // covariates shipped to the server (8 bytes per value). local_only: 0.
  std::uint64_t total_bytes = 0;
  int rounds_to_best = 0;
  int rounds_run = 0;
  std::size_t training_samples = 0;
  std::size_t n_clients = 0;
};

struct ComparisonTable {
  std::uint64_t seed = 0;
  std::vector<MethodRow> rows;  // ordered by method name

  const MethodRow* Find(Method method) const;
};

// Builds model specs for `datasets` (after optional calendar covariates).
ModelSpec SpecFor(const ComparisonConfig& config, std::size_t n_covariates);
ModelSpec SpecFor(const ComparisonConfig& config, std::span<const ClientDataset> datasets);

// Trains and evaluates every requested method on identical test splits.
ComparisonTable RunComparison(std::span<const ClientDataset> datasets,
                              const ComparisonConfig& config, std::uint64_t seed);

// Clients prepared the way the harness prepares them (calendar covariates,
// scaling mode).
std::vector<Client> PrepareFederation(std::span<const ClientDataset> datasets,
                                      const ComparisonConfig& config);

}  // namespace derfl
