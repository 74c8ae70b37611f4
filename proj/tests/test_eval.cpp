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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "derfl/errors.hpp"
#include "derfl/eval.hpp"
#include "derfl/rng.hpp"

namespace derfl {
namespace {

TEST(Metrics, HandExample) {
  const std::vector<double> pred{1, 2, 3};
  const std::vector<double> actual{1, 2, 5};
  const Metrics m = ComputeMetrics(pred, actual);
  EXPECT_DOUBLE_EQ(m.mae, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.rmse, std::sqrt(4.0 / 3.0));
  ASSERT_TRUE(m.mape.has_value());
  EXPECT_DOUBLE_EQ(*m.mape, 100.0 * 0.4 / 3.0);
  ASSERT_TRUE(m.nrmse.has_value());
  EXPECT_DOUBLE_EQ(*m.nrmse, std::sqrt(4.0 / 3.0) / (8.0 / 3.0));
  EXPECT_EQ(m.excluded_points, 0u);
  EXPECT_EQ(m.n_points, 3u);
}

TEST(Metrics, SmallExamples) {
  const Metrics same = ComputeMetrics(std::vector<double>{1, 2}, std::vector<double>{1, 2});
  EXPECT_EQ(same.mae, 0.0);
  EXPECT_EQ(same.rmse, 0.0);
  EXPECT_EQ(*same.mape, 0.0);
  const Metrics off = ComputeMetrics(std::vector<double>{0, 2}, std::vector<double>{1, 1});
  EXPECT_DOUBLE_EQ(off.mae, 1.0);
  EXPECT_DOUBLE_EQ(off.rmse, 1.0);
  EXPECT_DOUBLE_EQ(*off.mape, 100.0);
  const Metrics zero = ComputeMetrics(std::vector<double>{1, 1}, std::vector<double>{0, 2});
  EXPECT_EQ(zero.excluded_points, 1u);
  EXPECT_DOUBLE_EQ(*zero.mape, 50.0);
}

TEST(Metrics, ZeroActualsAreExcludedFromMape) {
  const std::vector<double> pred{0.5, 1.0, 2.0, 0.0};
  const std::vector<double> actual{0.0, 1.0, 4.0, 1e-9};
  const Metrics m = ComputeMetrics(pred, actual);
  EXPECT_EQ(m.excluded_points, 2u);
  ASSERT_TRUE(m.mape.has_value());
  EXPECT_DOUBLE_EQ(*m.mape, 25.0);

  const std::vector<double> night(5, 0.0);
  const Metrics dark = ComputeMetrics(std::vector<double>(5, 0.1), night);
  EXPECT_FALSE(dark.mape.has_value());
  EXPECT_FALSE(dark.nrmse.has_value());
  EXPECT_EQ(dark.excluded_points, 5u);
  EXPECT_DOUBLE_EQ(dark.mae, 0.1);
}

TEST(Metrics, Errors) {
  EXPECT_THROW(ComputeMetrics(std::vector<double>{1, 2}, std::vector<double>{1}), ShapeError);
  EXPECT_THROW(ComputeMetrics(std::vector<double>{}, std::vector<double>{}),
               InsufficientDataError);
}

TEST(Metrics, PerfectForecastIsZero) {
  const std::vector<double> v{3, 1, 4, 1, 5};
  const Metrics m = ComputeMetrics(v, v);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(*m.mape, 0.0);
}

TEST(Metrics, TranslationInvarianceAndTriangleInequality) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.Uniform() * 50);
    std::vector<double> p(n), a(n), q(n), ps(n), as(n);
    const double shift = rng.Uniform(-100, 100);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.Normal();
      a[i] = rng.Normal();
      q[i] = rng.Normal();
      ps[i] = p[i] + shift;
      as[i] = a[i] + shift;
    }
    const Metrics base = ComputeMetrics(p, a);
    const Metrics moved = ComputeMetrics(ps, as);
    EXPECT_NEAR(base.mae, moved.mae, 1e-9);
    EXPECT_NEAR(base.rmse, moved.rmse, 1e-9);
    EXPECT_LE(base.mae, base.rmse + 1e-12);
    EXPECT_LE(base.mae, ComputeMetrics(p, q).mae + ComputeMetrics(q, a).mae + 1e-12);
    EXPECT_LE(base.rmse, ComputeMetrics(p, q).rmse + ComputeMetrics(q, a).rmse + 1e-12);
  }
}

TimeSeries Series(std::int64_t start, std::vector<double> values) {
  TimeSeries s;
  s.start_epoch_hours = start;
  s.values = std::move(values);
  return s;
}

TEST(AggregateForecast, SumsMembersPerFeeder) {
  const std::vector<ClientSeries> series{
      {"a", "f1", Series(10, {1, 2}), Series(10, {1.5, 2.5})},
      {"b", "f1", Series(10, {3, 4}), Series(10, {3.5, 4.5})},
      {"c", "f2", Series(10, {7, 8}), Series(10, {7, 7})},
  };
  const auto feeders = AggregateForecast(series);
  ASSERT_EQ(feeders.size(), 2u);
  EXPECT_EQ(feeders.at("f1").predicted.values, (std::vector<double>{4, 6}));
  EXPECT_EQ(feeders.at("f1").actual.values, (std::vector<double>{5, 7}));
  EXPECT_EQ(feeders.at("f1").members, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(feeders.at("f2").predicted.values, (std::vector<double>{7, 8}));
}

TEST(AggregateForecast, SingleMemberIsIdentity) {
  const std::vector<ClientSeries> one{{"a", "f", Series(3, {1, 2}), Series(3, {3, 4})}};
  const auto feeders = AggregateForecast(one);
  EXPECT_EQ(feeders.at("f").predicted.values, (std::vector<double>{1, 2}));
  EXPECT_EQ(feeders.at("f").actual.values, (std::vector<double>{3, 4}));
  EXPECT_EQ(feeders.at("f").predicted.start_epoch_hours, 3);
}

TEST(AggregateForecast, FeederMaeBoundedBySumOfMembers) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ClientSeries> series;
    double member_sum = 0.0;
    const int members = 1 + static_cast<int>(rng.Uniform() * 6);
    for (int m = 0; m < members; ++m) {
      std::vector<double> p(24), a(24);
      for (int i = 0; i < 24; ++i) {
        a[i] = rng.Uniform(0.0, 5.0);
        p[i] = a[i] + rng.Normal();
      }
      member_sum += ComputeMetrics(p, a).mae;
      series.push_back({"c" + std::to_string(m), "f", Series(0, p), Series(0, a)});
    }
    const FeederSeries f = AggregateForecast(series).at("f");
    EXPECT_LE(ComputeMetrics(f.predicted.values, f.actual.values).mae, member_sum + 1e-12);
  }
}

TEST(AggregateForecast, MisalignedMembersRaise) {
  const std::vector<ClientSeries> shifted{
      {"a", "f1", Series(10, {1, 2}), Series(10, {1, 2})},
      {"b", "f1", Series(11, {1, 2}), Series(11, {1, 2})},
  };
  try {
    AggregateForecast(shifted);
    FAIL() << "expected AlignmentError";
  } catch (const AlignmentError& e) {
    EXPECT_NE(std::string(e.what()).find("f1"), std::string::npos);
  }
  const std::vector<ClientSeries> shorter{
      {"a", "f1", Series(10, {1, 2}), Series(10, {1, 2})},
      {"b", "f1", Series(10, {1, 2, 3}), Series(10, {1, 2, 3})},
  };
  EXPECT_THROW(AggregateForecast(shorter), AlignmentError);
  const std::vector<ClientSeries> inconsistent{
      {"a", "f1", Series(10, {1, 2}), Series(10, {1})},
  };
  EXPECT_THROW(AggregateForecast(inconsistent), AlignmentError);
}

TEST(FlexibilityBand, Examples) {
  const TimeSeries ten = Series(0, {10.0});
  const FlexBand c01 = FlexibilityBand(ten, FlexClass::kCurtailable, 0.1);
  EXPECT_DOUBLE_EQ(c01.p_min.values[0], 9.0);
  EXPECT_DOUBLE_EQ(c01.p_max.values[0], 10.0);
  const FlexBand s02 = FlexibilityBand(ten, FlexClass::kShiftable, 0.2);
  EXPECT_DOUBLE_EQ(s02.p_min.values[0], 8.0);
  EXPECT_DOUBLE_EQ(s02.p_max.values[0], 12.0);

  const TimeSeries f = Series(0, {10.0, 0.0});
  const FlexBand fixed = FlexibilityBand(f, FlexClass::kNonInterruptible, 0.3);
  EXPECT_EQ(fixed.p_min.values, f.values);
  EXPECT_EQ(fixed.p_max.values, f.values);
  const FlexBand curtail = FlexibilityBand(f, FlexClass::kCurtailable, 0.3);
  EXPECT_DOUBLE_EQ(curtail.p_min.values[0], 7.0);
  EXPECT_DOUBLE_EQ(curtail.p_max.values[0], 10.0);
  const FlexBand shift = FlexibilityBand(f, FlexClass::kShiftable, 0.3);
  EXPECT_DOUBLE_EQ(shift.p_min.values[0], 7.0);
  EXPECT_DOUBLE_EQ(shift.p_max.values[0], 13.0);
  EXPECT_EQ(shift.p_min.values[1], 0.0);
  EXPECT_EQ(shift.p_max.values[1], 0.0);
}

TEST(FlexibilityBand, Errors) {
  const TimeSeries f = Series(0, {1.0});
  EXPECT_THROW(FlexibilityBand(f, FlexClass::kShiftable, 1.5), ConfigError);
  EXPECT_THROW(FlexibilityBand(f, FlexClass::kShiftable, -0.1), ConfigError);
  EXPECT_THROW(FlexibilityBand(Series(0, {-1.0}), FlexClass::kCurtailable, 0.2), ConfigError);
}

TEST(FlexibilityBand, OrderedAndContainsForecast) {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    TimeSeries f;
    for (int i = 0; i < 24; ++i) f.values.push_back(rng.Uniform(0.0, 50.0));
    const double alpha = rng.Uniform();
    for (FlexClass c : {FlexClass::kShiftable, FlexClass::kCurtailable,
                        FlexClass::kNonInterruptible}) {
      const FlexBand band = FlexibilityBand(f, c, alpha);
      for (std::size_t i = 0; i < f.size(); ++i) {
        EXPECT_LE(0.0, band.p_min.values[i]);
        EXPECT_LE(band.p_min.values[i], f.values[i]);
        EXPECT_LE(f.values[i], band.p_max.values[i]);
      }
    }
  }
}

TEST(MethodNames, RoundTrip) {
  for (Method m : AllMethods()) EXPECT_EQ(ParseMethod(ToString(m)), m);
  EXPECT_EQ(AllMethods().size(), 8u);
  EXPECT_THROW(ParseMethod("fedprox"), ConfigError);
  EXPECT_EQ(ParseScalingMode("pooled"), ScalingMode::kPooled);
  EXPECT_THROW(ParseScalingMode("global"), ConfigError);
}

std::vector<ClientDataset> SmallPopulation(int n_clients) {
  PopulationSpec spec;
  spec.n_clients = n_clients;
  spec.n_archetypes = std::min(2, n_clients);
  spec.days = 21;
  spec.feeders = 2;
  spec.seed = 4;
  return GeneratePopulation(spec);
}

ComparisonConfig SmallConfig() {
  ComparisonConfig cfg;
  cfg.lag = 6;
  cfg.fl.rounds = 4;
  cfg.fl.batch_size = 32;
  cfg.fl.optimizer.lr = 0.01;
  cfg.cluster.warmup_rounds = 1;
  cfg.cluster.tau = 0.5;
  cfg.cluster.k = 2;
  return cfg;
}

TEST(Comparison, RowsMatchRequestedMethods) {
  const auto data = SmallPopulation(4);
  ComparisonConfig cfg = SmallConfig();
  cfg.methods = {Method::kLocalOnly, Method::kFedavg};
  const ComparisonTable t = RunComparison(data, cfg, 3);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].method, Method::kFedavg);
  EXPECT_EQ(t.rows[1].method, Method::kLocalOnly);
  EXPECT_EQ(t.rows[1].total_bytes, 0u);
  EXPECT_GT(t.rows[0].total_bytes, 0u);
  EXPECT_EQ(t.seed, 3u);
}

TEST(Comparison, AllMethodsOnSharedTestSplits) {
  const auto data = SmallPopulation(4);
  const ComparisonConfig cfg = SmallConfig();
  const ComparisonTable t = RunComparison(data, cfg, 3);
  ASSERT_EQ(t.rows.size(), 8u);
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    EXPECT_LT(ToString(t.rows[i - 1].method), ToString(t.rows[i].method));
  }
  const MethodRow* central = t.Find(Method::kCentralized);
  const MethodRow* local = t.Find(Method::kLocalOnly);
  ASSERT_NE(central, nullptr);
  ASSERT_NE(local, nullptr);
  EXPECT_EQ(central->training_samples, local->training_samples);
  const std::vector<Client> clients = PrepareFederation(data, cfg);
  std::size_t total = 0;
  for (const auto& c : clients) total += c.train_size();
  EXPECT_EQ(central->training_samples, total);
  for (const auto& row : t.rows) {
    EXPECT_EQ(row.client_mae.size(), 4u) << ToString(row.method);
    EXPECT_TRUE(std::isfinite(row.client_mean.mae)) << ToString(row.method);
    EXPECT_LE(row.rounds_to_best, row.rounds_run);
  }
  const MethodRow* ifca = t.Find(Method::kIfca);
  const MethodRow* fedavg = t.Find(Method::kFedavg);
  EXPECT_EQ(ifca->total_bytes, fedavg->total_bytes / 2 * 3);
}

TEST(Comparison, DeterministicForFixedSeed) {
  const auto data = SmallPopulation(4);
  const ComparisonConfig cfg = SmallConfig();
  const ComparisonTable a = RunComparison(data, cfg, 11);
  const ComparisonTable b = RunComparison(data, cfg, 11);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].client_mae, b.rows[i].client_mae);
    EXPECT_EQ(a.rows[i].total_bytes, b.rows[i].total_bytes);
  }
}

TEST(Comparison, FederatedMethodsNeedTwoClients) {
  const auto data = SmallPopulation(1);
  ComparisonConfig cfg = SmallConfig();
  cfg.methods = {Method::kFedavg};
  EXPECT_THROW(RunComparison(data, cfg, 1), ConfigError);
  cfg.methods = {Method::kLocalOnly};
  EXPECT_EQ(RunComparison(data, cfg, 1).rows.size(), 1u);
}

}  // namespace
}  // namespace derfl
