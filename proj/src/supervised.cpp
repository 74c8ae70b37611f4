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

#include <cmath>

#include <fmt/format.h>

#include "derfl/data.hpp"
#include "derfl/errors.hpp"

namespace derfl {

std::vector<double> Scaler::Apply(std::span<const double> xs) const {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(Apply(x));
  return out;
}

std::vector<double> Scaler::Invert(std::span<const double> zs) const {
  std::vector<double> out;
  out.reserve(zs.size());
  for (double z : zs) out.push_back(Invert(z));
  return out;
}

Scaler FitScaler(std::span<const double> values) {
  if (values.empty()) throw InsufficientDataError("cannot fit a scaler on no values");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  double std = std::sqrt(sq / static_cast<double>(values.size()));
  if (!(std >= 1e-12)) std = 1.0;
  return Scaler{mean, std};
}

SupervisedSet SupervisedSet::Slice(std::size_t begin, std::size_t end) const {
  SupervisedSet out;
  out.input_dim = input_dim;
  out.horizon = horizon;
  out.inputs.assign(inputs.begin() + static_cast<std::ptrdiff_t>(begin * input_dim),
                    inputs.begin() + static_cast<std::ptrdiff_t>(end * input_dim));
  out.targets.assign(targets.begin() + static_cast<std::ptrdiff_t>(begin * horizon),
                     targets.begin() + static_cast<std::ptrdiff_t>(end * horizon));
  out.sample_timestamps.assign(sample_timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                               sample_timestamps.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

std::size_t SupervisedSampleCount(std::size_t series_length, std::size_t lag,
                                  std::size_t horizon) {
  if (series_length < lag + horizon) return 0;
  return series_length - lag - horizon + 1;
}

SupervisedSet BuildSupervised(const TimeSeries& series,
                              std::span<const Covariate> covariates,
                              std::size_t lag, std::size_t horizon,
                              const FeatureScaling& scaling) {
  if (lag < 1 || horizon < 1) {
    throw ConfigError("lag and horizon must both be >= 1");
  }
  if (scaling.covariates.size() != covariates.size()) {
    throw ShapeError(fmt::format("{} covariate scalers for {} covariates",
                                 scaling.covariates.size(), covariates.size()));
  }
  for (const auto& c : covariates) {
    if (c.values.size() != series.size()) {
      throw ShapeError(fmt::format("covariate '{}' length {} != series length {}",
                                   c.name, c.values.size(), series.size()));
    }
  }
  const std::size_t n = SupervisedSampleCount(series.size(), lag, horizon);
  if (n == 0) {
    throw InsufficientDataError(fmt::format(
        "series of length {} is too short for lag {} and horizon {}",
        series.size(), lag, horizon));
  }
  SupervisedSet set;
  set.input_dim = lag + covariates.size();
  set.horizon = horizon;
  set.inputs.reserve(n * set.input_dim);
  set.targets.reserve(n * horizon);
  set.sample_timestamps.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t t = s + lag;
    for (std::size_t j = t - lag; j < t; ++j) {
      set.inputs.push_back(scaling.value.Apply(series.values[j]));
    }
    for (std::size_t c = 0; c < covariates.size(); ++c) {
      set.inputs.push_back(scaling.covariates[c].Apply(covariates[c].values[t]));
    }
    for (std::size_t j = t; j < t + horizon; ++j) {
      set.targets.push_back(scaling.value.Apply(series.values[j]));
    }
    set.sample_timestamps.push_back(series.TimestampAt(t));
  }
  return set;
}

void AppendSupervised(SupervisedSet& into, const SupervisedSet& other) {
  if (into.empty() && into.inputs.empty()) {
    into = other;
    return;
  }
  if (into.input_dim != other.input_dim || into.horizon != other.horizon) {
    throw ShapeError("cannot append supervised sets of different shapes");
  }
  into.inputs.insert(into.inputs.end(), other.inputs.begin(), other.inputs.end());
  into.targets.insert(into.targets.end(), other.targets.begin(), other.targets.end());
  into.sample_timestamps.insert(into.sample_timestamps.end(),
                                other.sample_timestamps.begin(),
                                other.sample_timestamps.end());
}

SplitSizes ChronologicalSplitSizes(std::size_t n) {
  const std::size_t train = n * 70 / 100;
  const std::size_t val = n * 15 / 100;
  return SplitSizes{train, val, n - train - val};
}

SplitSets SplitDataset(const SupervisedSet& set) {
  const std::size_t n = set.size();
  if (n < 3) {
    throw InsufficientDataError(fmt::format("cannot split {} samples (need >= 3)", n));
  }
  SplitSizes sizes = ChronologicalSplitSizes(n);
  return SplitSets{
      set.Slice(0, sizes.train),
      set.Slice(sizes.train, sizes.train + sizes.val),
      set.Slice(sizes.train + sizes.val, n),
  };
}

namespace {

struct TrainWindow {
  std::size_t value_end;      // raw values [0, value_end) feed training rows
  std::size_t covariate_begin;  // covariates at [begin, end) feed training rows
  std::size_t covariate_end;
};

TrainWindow TrainWindowFor(const ClientDataset& dataset, std::size_t lag,
                           std::size_t horizon) {
  const std::size_t n = SupervisedSampleCount(dataset.series.size(), lag, horizon);
  if (n < 3) {
    throw InsufficientDataError(fmt::format(
        "client {}: {} values yield {} samples for lag {} horizon {} (need >= 3)",
        dataset.client_id, dataset.series.size(), n, lag, horizon));
  }
  const std::size_t n_train = ChronologicalSplitSizes(n).train;
  if (n_train == 0) {
    throw InsufficientDataError(fmt::format("client {}: empty training split",
                                            dataset.client_id));
  }
  return TrainWindow{lag + n_train - 1 + horizon, lag, lag + n_train};
}

}  // namespace

FeatureScaling FitTrainScaling(const ClientDataset& dataset, std::size_t lag,
                               std::size_t horizon) {
  return FitPooledTrainScaling(std::span<const ClientDataset>(&dataset, 1), lag, horizon);
}

FeatureScaling FitPooledTrainScaling(std::span<const ClientDataset> datasets,
                                     std::size_t lag, std::size_t horizon) {
  if (datasets.empty()) throw InsufficientDataError("no datasets to fit scaling on");
  const std::size_t n_cov = datasets.front().covariates.size();
  std::vector<double> values;
  std::vector<std::vector<double>> covs(n_cov);
  for (const auto& ds : datasets) {
    ds.Validate();
    if (ds.covariates.size() != n_cov) {
      throw ShapeError(fmt::format("client {}: covariate count differs", ds.client_id));
    }
    TrainWindow w = TrainWindowFor(ds, lag, horizon);
    values.insert(values.end(), ds.series.values.begin(),
                  ds.series.values.begin() + static_cast<std::ptrdiff_t>(w.value_end));
    for (std::size_t c = 0; c < n_cov; ++c) {
      const auto& src = ds.covariates[c].values;
      covs[c].insert(covs[c].end(),
                     src.begin() + static_cast<std::ptrdiff_t>(w.covariate_begin),
                     src.begin() + static_cast<std::ptrdiff_t>(w.covariate_end));
    }
  }
  FeatureScaling scaling;
  scaling.value = FitScaler(values);
  for (const auto& c : covs) scaling.covariates.push_back(FitScaler(c));
  return scaling;
}

PreparedClient PrepareClient(const ClientDataset& dataset, std::size_t lag,
                             std::size_t horizon) {
  return PrepareClient(dataset, lag, horizon, FitTrainScaling(dataset, lag, horizon));
}

PreparedClient PrepareClient(const ClientDataset& dataset, std::size_t lag,
                             std::size_t horizon,
                             const FeatureScaling& shared_scaling) {
  dataset.Validate();
  PreparedClient prepared;
  prepared.client_id = dataset.client_id;
  prepared.feeder_id = dataset.feeder_id;
  prepared.der_class = dataset.der_class;
  prepared.flex_class = dataset.flex_class;
  prepared.archetype_id = dataset.archetype_id;
  prepared.scaling = shared_scaling;
  SupervisedSet all = BuildSupervised(dataset.series, dataset.covariates, lag,
                                      horizon, shared_scaling);
  prepared.splits = SplitDataset(all);
  if (prepared.splits.train.empty() || prepared.splits.val.empty() ||
      prepared.splits.test.empty()) {
    throw InsufficientDataError(fmt::format(
        "client {}: {} samples leave an empty train/val/test split",
        dataset.client_id, all.size()));
  }
  return prepared;
}

}  // namespace derfl
