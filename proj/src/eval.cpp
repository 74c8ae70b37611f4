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

#include "derfl/eval.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "derfl/errors.hpp"

namespace derfl {

Metrics ComputeMetrics(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) {
    throw ShapeError(fmt::format("metrics: {} predictions vs {} actuals", predicted.size(),
                                 actual.size()));
  }
  if (predicted.empty()) throw InsufficientDataError("metrics need at least one point");
  Metrics m;
  m.n_points = predicted.size();
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  double pct_sum = 0.0;
  double actual_abs_sum = 0.0;
  std::size_t pct_count = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - actual[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    actual_abs_sum += std::abs(actual[i]);
    if (std::abs(actual[i]) < kMapeZeroThreshold) {
      ++m.excluded_points;
    } else {
      pct_sum += std::abs(e) / std::abs(actual[i]);
      ++pct_count;
    }
  }
  const double n = static_cast<double>(predicted.size());
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq_sum / n);
  if (pct_count > 0) m.mape = 100.0 * pct_sum / static_cast<double>(pct_count);
  const double mean_abs = actual_abs_sum / n;
  if (mean_abs >= kMapeZeroThreshold) m.nrmse = m.rmse / mean_abs;
  return m;
}

std::map<std::string, FeederSeries> AggregateForecast(std::span<const ClientSeries> series) {
  std::map<std::string, FeederSeries> out;
  for (const auto& s : series) {
    if (s.predicted.size() != s.actual.size() ||
        s.predicted.start_epoch_hours != s.actual.start_epoch_hours) {
      throw AlignmentError(fmt::format("client {}: predicted and actual series differ",
                                       s.client_id));
    }
    auto [it, inserted] = out.try_emplace(s.feeder_id);
    FeederSeries& feeder = it->second;
    if (inserted) {
      feeder.predicted = s.predicted;
      feeder.actual = s.actual;
      feeder.members.push_back(s.client_id);
      continue;
    }
    if (feeder.predicted.size() != s.predicted.size() ||
        feeder.predicted.start_epoch_hours != s.predicted.start_epoch_hours ||
        feeder.predicted.step_hours != s.predicted.step_hours) {
      throw AlignmentError(fmt::format(
          "feeder {}: client {} ({} points from {}) is misaligned with {} points from {}",
          s.feeder_id, s.client_id, s.predicted.size(), s.predicted.start_epoch_hours,
          feeder.predicted.size(), feeder.predicted.start_epoch_hours));
    }
    for (std::size_t i = 0; i < s.predicted.size(); ++i) {
      feeder.predicted.values[i] += s.predicted.values[i];
      feeder.actual.values[i] += s.actual.values[i];
    }
    feeder.members.push_back(s.client_id);
  }
  return out;
}

FlexBand FlexibilityBand(const TimeSeries& forecast, FlexClass flex_class, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError(fmt::format("flexibility alpha {} is outside [0, 1]", alpha));
  }
  FlexBand band{forecast, forecast};
  for (std::size_t i = 0; i < forecast.size(); ++i) {
    const double f = forecast.values[i];
    if (f < 0.0) {
      throw ConfigError(fmt::format("flexibility band needs a non-negative forecast (got {})", f));
    }
    switch (flex_class) {
      case FlexClass::kNonInterruptible:
        break;
      case FlexClass::kCurtailable:
        band.p_min.values[i] = (1.0 - alpha) * f;
        break;
      case FlexClass::kShiftable:
        band.p_min.values[i] = (1.0 - alpha) * f;
        band.p_max.values[i] = (1.0 + alpha) * f;
        break;
    }
  }
  return band;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::pair<Method, std::string_view> kMethodNames[] = {
    {Method::kLocalOnly, "local_only"},
    {Method::kCentralized, "centralized"},
    {Method::kFedavg, "fedavg"},
    {Method::kFedavgPersonalized, "fedavg_personalized"},
    {Method::kHc, "hc"},
    {Method::kHcPersonalized, "hc_personalized"},
    {Method::kIfca, "ifca"},
    {Method::kIfcaPersonalized, "ifca_personalized"},
};

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

MetricSummary Summarize(const std::vector<Metrics>& metrics, bool median) {
  MetricSummary s;
  std::vector<double> mae, rmse, mape, nrmse;
  for (const auto& m : metrics) {
    mae.push_back(m.mae);
    rmse.push_back(m.rmse);
    if (m.mape) mape.push_back(*m.mape);
    if (m.nrmse) nrmse.push_back(*m.nrmse);
    s.excluded_points += m.excluded_points;
  }
  auto reduce = [median](const std::vector<double>& v) {
    if (median) return Median(v);
    double sum = 0.0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
  };
  s.mae = reduce(mae);
  s.rmse = reduce(rmse);
  if (!mape.empty()) s.mape = reduce(mape);
  if (!nrmse.empty()) s.nrmse = reduce(nrmse);
  return s;
}

// Scores a set of per-client models. `model_for` maps client index to params.
template <typename ModelFor>
void Score(MethodRow& row, std::span<const Client> clients, ModelFor&& model_for) {
  std::vector<Metrics> per_client;
  std::vector<TestForecast> forecasts;
  for (std::size_t i = 0; i < clients.size(); ++i) {
    forecasts.push_back(clients[i].Forecast(model_for(i)));
    per_client.push_back(ComputeMetrics(forecasts.back().predicted_kw,
                                        forecasts.back().actual_kw));
    row.client_mae.push_back(per_client.back().mae);
  }
  row.client_mean = Summarize(per_client, false);
  row.client_median = Summarize(per_client, true);
  row.n_clients = clients.size();

  // Feeder aggregation runs once per horizon step; each step forms an hourly
  // series starting at the first test target plus the step offset.
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> feeder_points;
  const std::size_t horizon = forecasts.empty() ? 1 : forecasts.front().horizon;
  for (std::size_t step = 0; step < horizon; ++step) {
    std::vector<ClientSeries> series;
    for (const auto& f : forecasts) {
      ClientSeries s;
      s.client_id = f.client_id;
      s.feeder_id = f.feeder_id;
      const std::size_t rows = f.timestamps.size();
      s.predicted.start_epoch_hours = f.timestamps.front() + static_cast<std::int64_t>(step);
      s.actual.start_epoch_hours = s.predicted.start_epoch_hours;
      for (std::size_t r = 0; r < rows; ++r) {
        s.predicted.values.push_back(f.predicted_kw[r * f.horizon + step]);
        s.actual.values.push_back(f.actual_kw[r * f.horizon + step]);
      }
      series.push_back(std::move(s));
    }
    for (auto& [feeder, agg] : AggregateForecast(series)) {
      auto& points = feeder_points[feeder];
      points.first.insert(points.first.end(), agg.predicted.values.begin(),
                          agg.predicted.values.end());
      points.second.insert(points.second.end(), agg.actual.values.begin(),
                           agg.actual.values.end());
    }
  }
  std::vector<Metrics> per_feeder;
  for (const auto& [feeder, points] : feeder_points) {
    per_feeder.push_back(ComputeMetrics(points.first, points.second));
  }
  row.feeder_mean = Summarize(per_feeder, false);
}

std::vector<ClientDataset> WithCalendar(std::span<const ClientDataset> datasets, bool add) {
  std::vector<ClientDataset> out(datasets.begin(), datasets.end());
  if (add) {
    for (auto& ds : out) AddCalendarCovariates(ds);
  }
  return out;
}

std::vector<PreparedClient> PrepareAll(const std::vector<ClientDataset>& datasets,
                                       const ComparisonConfig& config, bool pooled) {
  std::vector<PreparedClient> prepared;
  if (pooled) {
    FeatureScaling shared = FitPooledTrainScaling(datasets, config.lag, config.horizon);
    for (const auto& ds : datasets) {
      prepared.push_back(PrepareClient(ds, config.lag, config.horizon, shared));
    }
  } else {
    for (const auto& ds : datasets) {
      prepared.push_back(PrepareClient(ds, config.lag, config.horizon));
    }
  }
  return prepared;
}

bool IsFederated(Method m) {
  return m != Method::kLocalOnly && m != Method::kCentralized;
}

}  // namespace

std::string_view ToString(Method method) {
  for (const auto& [value, name] : kMethodNames) {
    if (value == method) return name;
  }
  return "unknown";
}

Method ParseMethod(std::string_view text) {
  for (const auto& [value, name] : kMethodNames) {
    if (name == text) return value;
  }
  throw ConfigError(fmt::format("unknown method '{}'", text));
}

std::vector<Method> AllMethods() {
  std::vector<Method> out;
  for (const auto& [value, name] : kMethodNames) out.push_back(value);
  return out;
}

std::string_view ToString(ScalingMode mode) {
  return mode == ScalingMode::kPerClient ? "per_client" : "pooled";
}

ScalingMode ParseScalingMode(std::string_view text) {
  if (text == "per_client") return ScalingMode::kPerClient;
  if (text == "pooled") return ScalingMode::kPooled;
  throw ConfigError(fmt::format("unknown scaling mode '{}'", text));
}

const MethodRow* ComparisonTable::Find(Method method) const {
  for (const auto& row : rows) {
    if (row.method == method) return &row;
  }
  return nullptr;
}

ModelSpec SpecFor(const ComparisonConfig& config, std::size_t n_covariates) {
  ModelSpec spec;
  spec.kind = config.model_kind;
  spec.input_dim = config.lag + n_covariates;
  spec.hidden_dim = config.model_kind == ModelKind::kMlp ? config.hidden_dim : 0;
  spec.horizon = config.horizon;
  spec.Validate();
  return spec;
}

ModelSpec SpecFor(const ComparisonConfig& config, std::span<const ClientDataset> datasets) {
  if (datasets.empty()) throw InsufficientDataError("no datasets");
  return SpecFor(config, WithCalendar(datasets.first(1), config.calendar_features)
                             .front()
                             .covariates.size());
}

std::vector<Client> PrepareFederation(std::span<const ClientDataset> datasets,
                                      const ComparisonConfig& config) {
  const auto with_calendar = WithCalendar(datasets, config.calendar_features);
  return MakeClients(PrepareAll(with_calendar, config, config.scaling == ScalingMode::kPooled));
}

ComparisonTable RunComparison(std::span<const ClientDataset> datasets,
                              const ComparisonConfig& config, std::uint64_t seed) {
  if (datasets.empty()) throw InsufficientDataError("comparison needs at least one client");
  if (config.methods.empty()) throw ConfigError("comparison needs at least one method");
  FLConfig fl = config.fl;
  fl.seed = seed;
  fl.Validate();

  const auto with_calendar = WithCalendar(datasets, config.calendar_features);
  const ModelSpec spec = SpecFor(config, with_calendar.front().covariates.size());
  const std::vector<Client> clients = MakeClients(
      PrepareAll(with_calendar, config, config.scaling == ScalingMode::kPooled));

  std::vector<Method> methods = config.methods;
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
  for (Method m : methods) {
    if (IsFederated(m) && clients.size() < 2) {
      throw ConfigError(fmt::format("method {} needs at least 2 clients", ToString(m)));
    }
  }

  auto requested = [&](Method a, Method b) {
    return std::find(methods.begin(), methods.end(), a) != methods.end() ||
           std::find(methods.begin(), methods.end(), b) != methods.end();
  };
  auto federated_run = [&](FlMode mode) {
    RunOptions options;
    options.mode = mode;
    options.cluster = config.cluster;
    options.dp = config.dp;
    return RunTraining(clients, spec, fl, options);
  };

  std::size_t total_train = 0;
  for (const auto& c : clients) total_train += c.train_size();
  const double personal_lr = config.personalization.lr_scale * fl.optimizer.lr;

  ComparisonTable table;
  table.seed = seed;
  auto add_federated = [&](FlMode mode, Method base, Method personalized) {
    if (!requested(base, personalized)) return;
    RunResult run = federated_run(mode);
    auto fill = [&](MethodRow& row) {
      row.total_bytes = run.TotalBytes();
      row.rounds_to_best = run.best_round;
      row.rounds_run = static_cast<int>(run.reports.size());
      row.training_samples = total_train;
    };
    if (std::find(methods.begin(), methods.end(), base) != methods.end()) {
      MethodRow row;
      row.method = base;
      fill(row);
      Score(row, clients, [&](std::size_t i) { return run.ModelFor(clients[i].id()); });
      table.rows.push_back(std::move(row));
    }
    if (std::find(methods.begin(), methods.end(), personalized) != methods.end()) {
      MethodRow row;
      row.method = personalized;
      fill(row);
      std::vector<ModelParams> tuned;
      for (const auto& c : clients) {
        tuned.push_back(
            c.Personalize(run.ModelFor(c.id()), config.personalization.epochs, personal_lr)
                .params);
      }
      Score(row, clients, [&](std::size_t i) { return tuned[i]; });
      table.rows.push_back(std::move(row));
    }
  };

  for (Method m : methods) {
    if (m == Method::kLocalOnly) {
      MethodRow row;
      row.method = m;
      std::vector<ModelParams> models;
      std::vector<int> best_rounds;
      int rounds_run = 0;
      for (std::size_t i = 0; i < clients.size(); ++i) {
        RunResult run = RunTraining(std::span<const Client>(&clients[i], 1), spec, fl, {});
        models.push_back(run.models.front());
        best_rounds.push_back(run.best_round);
        rounds_run = std::max(rounds_run, static_cast<int>(run.reports.size()));
      }
      std::sort(best_rounds.begin(), best_rounds.end());
      row.rounds_to_best = best_rounds[(best_rounds.size() - 1) / 2];
      row.rounds_run = rounds_run;
      row.training_samples = total_train;
      row.total_bytes = 0;
      Score(row, clients, [&](std::size_t i) { return models[i]; });
      table.rows.push_back(std::move(row));
    } else if (m == Method::kCentralized) {
      // One model on the pooled samples with pooled scaling statistics.
      std::vector<PreparedClient> pooled_parts = PrepareAll(with_calendar, config, true);
      PreparedClient pooled;
      pooled.client_id = "pooled";
      pooled.feeder_id = "pooled";
      pooled.scaling = pooled_parts.front().scaling;
      for (const auto& p : pooled_parts) {
        AppendSupervised(pooled.splits.train, p.splits.train);
        AppendSupervised(pooled.splits.val, p.splits.val);
        AppendSupervised(pooled.splits.test, p.splits.test);
      }
      const std::vector<Client> pooled_client = MakeClients({pooled});
      RunResult run = RunTraining(pooled_client, spec, fl, {});
      const std::vector<Client> evaluators = MakeClients(std::move(pooled_parts));
      MethodRow row;
      row.method = m;
      row.rounds_to_best = run.best_round;
      row.rounds_run = static_cast<int>(run.reports.size());
      row.training_samples = pooled_client.front().train_size();
      for (const auto& ds : with_calendar) {
        row.total_bytes += static_cast<std::uint64_t>(ds.series.size()) *
                           (1 + ds.covariates.size()) * 8;
      }
      Score(row, evaluators, [&](std::size_t) { return run.models.front(); });
      table.rows.push_back(std::move(row));
    }
  }
  add_federated(FlMode::kGlobal, Method::kFedavg, Method::kFedavgPersonalized);
  add_federated(FlMode::kHc, Method::kHc, Method::kHcPersonalized);
  add_federated(FlMode::kIfca, Method::kIfca, Method::kIfcaPersonalized);

  std::sort(table.rows.begin(), table.rows.end(), [](const MethodRow& a, const MethodRow& b) {
    return ToString(a.method) < ToString(b.method);
  });
  return table;
}

}  // namespace derfl
