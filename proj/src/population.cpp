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

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "derfl/data.hpp"
#include "derfl/errors.hpp"
#include "derfl/rng.hpp"

namespace derfl {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kYearDays = 365.25;

// Per-client generative parameters; archetypes and idiosyncratic draws share
// this layout so heterogeneity is a plain interpolation between the two.
struct ShapeParams {
  double base_kw;
  double amp1;
  double phase1;
  double amp2;
  double phase2;
  double weekend_factor;
  double temp_coef;  // relative load change per degree C above 15 C
  double pv_capacity_kw;
  double cloud_mean;
};

ShapeParams DrawArchetype(std::uint64_t seed, int archetype, int k) {
  Rng rng(DeriveSeed(seed, "archetype", {}, archetype));
  const double offset = kTwoPi * archetype / k;
  ShapeParams p{};
  p.base_kw = 0.8 + 1.2 * rng.Uniform();
  p.amp1 = 0.35 + 0.15 * rng.Uniform();
  p.phase1 = offset + 0.4 * (rng.Uniform() - 0.5);
  p.amp2 = 0.15 + 0.1 * rng.Uniform();
  p.phase2 = offset + 0.4 * (rng.Uniform() - 0.5);
  p.weekend_factor = 0.85 + 0.3 * rng.Uniform();
  p.temp_coef = (archetype % 2 == 0 ? 1.0 : -1.0) * (0.02 + 0.02 * rng.Uniform());
  p.pv_capacity_kw = 3.0 + 3.0 * rng.Uniform();
  p.cloud_mean = 0.6 + 0.3 * rng.Uniform();
  return p;
}

ShapeParams DrawIdiosyncratic(std::uint64_t seed, const std::string& client_id) {
  Rng rng(DeriveSeed(seed, "idiosyncratic", client_id));
  ShapeParams p{};
  p.base_kw = 0.8 + 1.2 * rng.Uniform();
  p.amp1 = 0.35 + 0.15 * rng.Uniform();
  p.phase1 = kTwoPi * rng.Uniform();
  p.amp2 = 0.15 + 0.1 * rng.Uniform();
  p.phase2 = kTwoPi * rng.Uniform();
  p.weekend_factor = 0.85 + 0.3 * rng.Uniform();
  p.temp_coef = (rng.Uniform() < 0.5 ? 1.0 : -1.0) * (0.02 + 0.02 * rng.Uniform());
  p.pv_capacity_kw = 3.0 + 3.0 * rng.Uniform();
  p.cloud_mean = 0.6 + 0.3 * rng.Uniform();
  return p;
}

ShapeParams Blend(const ShapeParams& a, const ShapeParams& b, double lambda) {
  auto mix = [lambda](double x, double y) { return (1.0 - lambda) * x + lambda * y; };
  return ShapeParams{
      mix(a.base_kw, b.base_kw),         mix(a.amp1, b.amp1),
      mix(a.phase1, b.phase1),           mix(a.amp2, b.amp2),
      mix(a.phase2, b.phase2),           mix(a.weekend_factor, b.weekend_factor),
      mix(a.temp_coef, b.temp_coef),     mix(a.pv_capacity_kw, b.pv_capacity_kw),
      mix(a.cloud_mean, b.cloud_mean),
  };
}

struct Weather {
  std::vector<double> temperature_c;
  std::vector<double> irradiance;  // clear-sky x cloud factor, in [0, 1]
};

Weather GenerateWeather(const PopulationSpec& spec, const std::string& feeder_id,
                        std::size_t hours) {
  Rng rng(DeriveSeed(spec.seed, "weather", feeder_id));
  Weather w;
  w.temperature_c.reserve(hours);
  w.irradiance.reserve(hours);
  double temp_noise = 0.0;
  const double cloud_mean = 0.75;
  double cloud = cloud_mean;
  for (std::size_t t = 0; t < hours; ++t) {
    CalendarHour cal = ToCalendar(spec.start_epoch_hours + static_cast<std::int64_t>(t));
    temp_noise = 0.9 * temp_noise + 0.8 * rng.Normal();
    double temp = 12.0 + 9.0 * std::sin(kTwoPi * (cal.day_of_year - 110) / kYearDays) +
                  4.0 * std::cos(kTwoPi * (cal.hour - 15) / 24.0) + temp_noise;
    cloud = std::clamp(cloud_mean + 0.8 * (cloud - cloud_mean) + 0.1 * rng.Normal(),
                       0.0, 1.0);
    w.temperature_c.push_back(temp);
    w.irradiance.push_back(ClearSkyFactor(cal.day_of_year, cal.hour) * cloud);
  }
  return w;
}

std::vector<DerClass> AllocateClasses(const PopulationSpec& spec) {
  // Largest-remainder quota per class, assigned in contiguous client blocks.
  const auto n = static_cast<std::size_t>(spec.n_clients);
  std::vector<std::pair<DerClass, std::size_t>> counts;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (const auto& [der_class, fraction] : spec.der_mix) {
    double exact = fraction * static_cast<double>(n);
    auto whole = static_cast<std::size_t>(std::floor(exact + 1e-9));
    whole = std::min(whole, n - assigned);
    remainders.emplace_back(exact - static_cast<double>(whole), counts.size());
    counts.emplace_back(der_class, whole);
    assigned += whole;
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n && i < remainders.size(); ++i, ++assigned) {
    counts[remainders[i].second].second += 1;
  }
  std::vector<DerClass> classes;
  classes.reserve(n);
  for (const auto& [der_class, count] : counts) {
    classes.insert(classes.end(), count, der_class);
  }
  while (classes.size() < n) classes.push_back(DerClass::kFixedLoad);
  return classes;
}

std::string ClientName(int index, int n_clients) {
  int width = std::max<int>(3, static_cast<int>(fmt::format("{}", n_clients - 1).size()));
  return fmt::format("c{:0{}d}", index, width);
}

}  // namespace

void PopulationSpec::Validate() const {
  if (n_clients < 1) throw ConfigError("population.n_clients must be >= 1");
  if (n_archetypes < 1 || n_archetypes > n_clients) {
    throw ConfigError("population.n_archetypes must be in [1, n_clients]");
  }
  if (!(heterogeneity >= 0.0 && heterogeneity <= 1.0)) {
    throw ConfigError("population.heterogeneity must be in [0, 1]");
  }
  if (days < 1) throw ConfigError("population.days must be >= 1");
  if (feeders < 1) throw ConfigError("population.feeders must be >= 1");
  if (harmonics < 0 || harmonics > 2) {
    throw ConfigError("population.harmonics must be in [0, 2]");
  }
  if (!(ar_coef > -1.0 && ar_coef < 1.0)) {
    throw ConfigError("population.ar_coef must be in (-1, 1)");
  }
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
    throw ConfigError("population.noise_std must be >= 0");
  }
  if (der_mix.empty()) throw ConfigError("population.der_mix must not be empty");
  double total = 0.0;
  for (const auto& [der_class, fraction] : der_mix) {
    if (!(fraction >= 0.0)) {
      throw ConfigError(fmt::format("population.der_mix.{} must be >= 0",
                                    ToString(der_class)));
    }
    total += fraction;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError(fmt::format("population.der_mix fractions sum to {}, not 1", total));
  }
  if (shift_changepoint) {
    if (shift_changepoint->day < 0) {
      throw ConfigError("population.shift_changepoint.day must be >= 0");
    }
    if (!(shift_changepoint->magnitude > -1.0) ||
        !std::isfinite(shift_changepoint->magnitude)) {
      throw ConfigError("population.shift_changepoint.magnitude must be > -1");
    }
  }
}

DaylightWindow DaylightFor(int day_of_year) {
  double day_length = 12.0 + 3.0 * std::sin(kTwoPi * (day_of_year - 80) / kYearDays);
  return DaylightWindow{12.0 - day_length / 2.0, 12.0 + day_length / 2.0};
}

double ClearSkyFactor(int day_of_year, int hour) {
  DaylightWindow window = DaylightFor(day_of_year);
  const double h = static_cast<double>(hour);
  if (h <= window.sunrise || h >= window.sunset) return 0.0;
  double half = (window.sunset - window.sunrise) / 2.0;
  double x = (h - 12.0) / half;
  double seasonal = 0.75 + 0.25 * std::sin(kTwoPi * (day_of_year - 80) / kYearDays);
  return std::max(0.0, seasonal * (1.0 - x * x));
}

std::vector<ClientDataset> GeneratePopulation(const PopulationSpec& spec) {
  spec.Validate();
  const std::size_t hours = static_cast<std::size_t>(spec.days) * 24;
  const int k = spec.n_archetypes;

  std::vector<ShapeParams> archetypes;
  for (int j = 0; j < k; ++j) archetypes.push_back(DrawArchetype(spec.seed, j, k));

  std::vector<Weather> weather;
  std::vector<std::string> feeder_names;
  for (int f = 0; f < spec.feeders; ++f) {
    feeder_names.push_back(fmt::format("feeder_{}", f));
    weather.push_back(GenerateWeather(spec, feeder_names.back(), hours));
  }

  const std::vector<DerClass> classes = AllocateClasses(spec);
  const std::int64_t shift_start =
      spec.shift_changepoint ? static_cast<std::int64_t>(spec.shift_changepoint->day) * 24
                             : -1;

  std::vector<ClientDataset> out;
  out.reserve(static_cast<std::size_t>(spec.n_clients));
  for (int i = 0; i < spec.n_clients; ++i) {
    ClientDataset ds;
    ds.client_id = ClientName(i, spec.n_clients);
    ds.archetype_id = i % k;
    ds.der_class = classes[static_cast<std::size_t>(i)];
    ds.flex_class = DefaultFlexClass(ds.der_class);
    const int feeder = i % spec.feeders;
    ds.feeder_id = feeder_names[static_cast<std::size_t>(feeder)];
    const Weather& w = weather[static_cast<std::size_t>(feeder)];

    ShapeParams p = archetypes[static_cast<std::size_t>(ds.archetype_id)];
    if (spec.heterogeneity > 0.0) {
      p = Blend(p, DrawIdiosyncratic(spec.seed, ds.client_id), spec.heterogeneity);
    }

    Rng noise_rng(DeriveSeed(spec.seed, "noise", ds.client_id));
    ds.series.start_epoch_hours = spec.start_epoch_hours;
    ds.series.step_hours = 1;
    ds.series.values.reserve(hours);
    double ar_state = 0.0;
    double cloud = p.cloud_mean;
    const double omega = kTwoPi / 24.0;
    for (std::size_t t = 0; t < hours; ++t) {
      CalendarHour cal = ToCalendar(spec.start_epoch_hours + static_cast<std::int64_t>(t));
      const double shift =
          (shift_start >= 0 && static_cast<std::int64_t>(t) >= shift_start)
              ? 1.0 + spec.shift_changepoint->magnitude
              : 1.0;
      double value = 0.0;
      if (ds.der_class == DerClass::kPv) {
        cloud = std::clamp(p.cloud_mean + spec.ar_coef * (cloud - p.cloud_mean) +
                               3.0 * spec.noise_std * noise_rng.Normal(),
                           0.0, 1.0);
        value = p.pv_capacity_kw * ClearSkyFactor(cal.day_of_year, cal.hour) * cloud * shift;
      } else {
        double shape = 1.0;
        if (spec.harmonics >= 1) shape += p.amp1 * std::cos(omega * cal.hour - p.phase1);
        if (spec.harmonics >= 2) shape += p.amp2 * std::cos(2.0 * omega * cal.hour - p.phase2);
        double level = p.base_kw * shape * (cal.weekend ? p.weekend_factor : 1.0);
        double temp_coef = ds.der_class == DerClass::kHvac ? 3.0 * p.temp_coef : p.temp_coef;
        level += p.base_kw * temp_coef * (w.temperature_c[t] - 15.0);
        if (ds.der_class == DerClass::kEvCharger && !cal.weekend && cal.hour >= 18 &&
            cal.hour < 22) {
          level += 1.2 * p.base_kw;
        }
        if (ds.der_class == DerClass::kBattery && cal.hour >= 1 && cal.hour < 5) {
          level += 0.8 * p.base_kw;
        }
        ar_state = spec.ar_coef * ar_state + spec.noise_std * p.base_kw * noise_rng.Normal();
        value = std::max(0.0, level * shift + ar_state);
      }
      ds.series.values.push_back(value);
    }
    ds.covariates.push_back(Covariate{"temperature_c", w.temperature_c});
    ds.covariates.push_back(Covariate{"irradiance", w.irradiance});
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace derfl
