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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace derfl {

enum class DerClass { kFixedLoad, kHvac, kEvCharger, kBattery, kPv };
enum class FlexClass { kShiftable, kCurtailable, kNonInterruptible };

std::string_view ToString(DerClass der_class);
std::string_view ToString(FlexClass flex_class);
DerClass ParseDerClass(std::string_view text);
FlexClass ParseFlexClass(std::string_view text);
FlexClass DefaultFlexClass(DerClass der_class);

// --- Calendar helpers (UTC, hours since 1970-01-01T00:00). ---

struct CalendarHour {
  int year;
  int day_of_year;  // 1-based
  int hour;         // 0..23
  bool weekend;
};

CalendarHour ToCalendar(std::int64_t epoch_hours);
std::string FormatIsoHour(std::int64_t epoch_hours);
// Accepts "YYYY-MM-DDTHH[:MM[:SS]][Z]" (a space may replace the 'T'); minutes
// and seconds must be zero. Returns nullopt on anything else.
std::optional<std::int64_t> ParseIsoHour(std::string_view text);

// 2023-01-01T00:00Z.
constexpr std::int64_t kDefaultStartEpochHours = 464592;

struct TimeSeries {
  std::int64_t start_epoch_hours = kDefaultStartEpochHours;
  std::int64_t step_hours = 1;
  std::vector<double> values;  // kW

  std::size_t size() const { return values.size(); }
  std::int64_t TimestampAt(std::size_t i) const {
    return start_epoch_hours + static_cast<std::int64_t>(i) * step_hours;
  }
};

struct Covariate {
  std::string name;
  std::vector<double> values;
};

struct ClientDataset {
  std::string client_id;
  TimeSeries series;
  std::vector<Covariate> covariates;
  DerClass der_class = DerClass::kFixedLoad;
  FlexClass flex_class = FlexClass::kNonInterruptible;
  std::string feeder_id;
  int archetype_id = -1;

  // Throws ShapeError / NumericError on broken invariants.
  void Validate() const;
};

// Appends hour-of-day sine/cosine pairs for harmonics 1..`harmonics`
// (hour_sin, hour_cos, hour_sin2, hour_cos2, ...).
void AddCalendarCovariates(ClientDataset& dataset, int harmonics = 2);

// ---------------------------------------------------------------------------
// Synthetic population.

struct ShiftChangepoint {
  int day = 0;
  double magnitude = 0.0;  // relative level change applied from `day` onward
};

struct PopulationSpec {
  int n_clients = 20;
  int n_archetypes = 2;
  // 0: clients equal their archetype; 1: fully idiosyncratic parameters.
  double heterogeneity = 0.0;
  int days = 60;
  std::map<DerClass, double> der_mix = {{DerClass::kFixedLoad, 1.0}};
  int feeders = 1;
  std::optional<ShiftChangepoint> shift_changepoint;
  std::uint64_t seed = 0;
  std::int64_t start_epoch_hours = kDefaultStartEpochHours;
  int harmonics = 2;       // Fourier harmonics in the daily load shape (0..2)
  double ar_coef = 0.7;    // AR(1) coefficient of load noise and cloud factor
  double noise_std = 0.05; // innovation std, relative to the client base load

  // Throws ConfigError.
  void Validate() const;
};

struct DaylightWindow {
  double sunrise;  // hour of day
  double sunset;
};

DaylightWindow DaylightFor(int day_of_year);
// Clear-sky irradiance proxy in [0, 1]; exactly 0 outside the daylight window.
double ClearSkyFactor(int day_of_year, int hour);

std::vector<ClientDataset> GeneratePopulation(const PopulationSpec& spec);

// ---------------------------------------------------------------------------
// CSV ingestion / export.

struct CsvSchema {
  std::string timestamp = "timestamp";
  std::string client_id = "client_id";
  std::string value_kw = "value_kw";
  // Optional metadata columns; used when present in the header.
  std::string feeder_id = "feeder_id";
  std::string der_class = "der_class";
  // Fills single-hour and longer gaps with the previous row instead of
  // raising GapError.
  bool forward_fill = false;
};

// Every header column not named by the schema is read as a covariate.
std::vector<ClientDataset> LoadCsv(const std::filesystem::path& path,
                                   const CsvSchema& schema = {});
std::vector<ClientDataset> ParseCsv(std::string_view text,
                                    const CsvSchema& schema = {});

// Writes the ingestion schema (plus feeder_id, der_class and covariates).
// All datasets must carry the same covariate names.
std::string FormatCsv(std::span<const ClientDataset> datasets);
void WriteCsv(const std::filesystem::path& path,
              std::span<const ClientDataset> datasets);

// ---------------------------------------------------------------------------
// Supervised windows.

struct Scaler {
  double mean = 0.0;
  double std = 1.0;

  double Apply(double x) const { return (x - mean) / std; }
  double Invert(double z) const { return z * std + mean; }
  std::vector<double> Apply(std::span<const double> xs) const;
  std::vector<double> Invert(std::span<const double> zs) const;
};

// Population mean and std; std below 1e-12 is replaced by 1.0.
Scaler FitScaler(std::span<const double> values);

struct FeatureScaling {
  Scaler value;
  std::vector<Scaler> covariates;  // one per covariate, in dataset order
};

struct SupervisedSet {
  std::size_t input_dim = 0;
  std::size_t horizon = 0;
  std::vector<double> inputs;   // n x input_dim, row-major
  std::vector<double> targets;  // n x horizon, row-major
  std::vector<std::int64_t> sample_timestamps;  // target start per row

  std::size_t size() const { return sample_timestamps.size(); }
  bool empty() const { return sample_timestamps.empty(); }
  std::span<const double> Input(std::size_t row) const {
    return {inputs.data() + row * input_dim, input_dim};
  }
  std::span<const double> Target(std::size_t row) const {
    return {targets.data() + row * horizon, horizon};
  }
  SupervisedSet Slice(std::size_t begin, std::size_t end) const;
};

std::size_t SupervisedSampleCount(std::size_t series_length, std::size_t lag,
                                  std::size_t horizon);

// Row t: scaled values [t-lag, t) then scaled covariates at t; target: scaled
// values [t, t+horizon).
SupervisedSet BuildSupervised(const TimeSeries& series,
                              std::span<const Covariate> covariates,
                              std::size_t lag, std::size_t horizon,
                              const FeatureScaling& scaling);

// Appends the rows of `other` (same shape) to `into`.
void AppendSupervised(SupervisedSet& into, const SupervisedSet& other);

struct SplitSets {
  SupervisedSet train;
  SupervisedSet val;
  SupervisedSet test;
};

struct SplitSizes {
  std::size_t train;
  std::size_t val;
  std::size_t test;
};

// floor(0.7 n), floor(0.15 n), remainder; computed in integer arithmetic.
SplitSizes ChronologicalSplitSizes(std::size_t n);
SplitSets SplitDataset(const SupervisedSet& set);

// Scaling statistics over the raw values and covariates that feed the
// training split only. Validation and test rows never reach these fits.
FeatureScaling FitTrainScaling(const ClientDataset& dataset, std::size_t lag,
                               std::size_t horizon);
FeatureScaling FitPooledTrainScaling(std::span<const ClientDataset> datasets,
                                     std::size_t lag, std::size_t horizon);

// A client's private, ready-to-train data. Only client-side code holds it.
struct PreparedClient {
  std::string client_id;
  std::string feeder_id;
  DerClass der_class = DerClass::kFixedLoad;
  FlexClass flex_class = FlexClass::kNonInterruptible;
  int archetype_id = -1;
  FeatureScaling scaling;
  SplitSets splits;
};

// Requires non-empty train, validation and test splits.
PreparedClient PrepareClient(const ClientDataset& dataset, std::size_t lag,
                             std::size_t horizon);
PreparedClient PrepareClient(const ClientDataset& dataset, std::size_t lag,
                             std::size_t horizon,
                             const FeatureScaling& shared_scaling);

}  // namespace derfl
