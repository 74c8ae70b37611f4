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
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <cstdlib>

#include <fmt/format.h>

#include "derfl/data.hpp"
#include "derfl/errors.hpp"

namespace derfl {

namespace {

constexpr std::pair<DerClass, std::string_view> kDerNames[] = {
    {DerClass::kFixedLoad, "fixed_load"},
    {DerClass::kHvac, "hvac"},
    {DerClass::kEvCharger, "ev_charger"},
    {DerClass::kBattery, "battery"},
    {DerClass::kPv, "pv"},
};

constexpr std::pair<FlexClass, std::string_view> kFlexNames[] = {
    {FlexClass::kShiftable, "shiftable"},
    {FlexClass::kCurtailable, "curtailable"},
    {FlexClass::kNonInterruptible, "non_interruptible"},
};

template <typename T>
bool ParseInt(std::string_view text, T& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(Trim(line.substr(start)));
      break;
    }
    fields.push_back(Trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

bool ParseDouble(std::string_view text, double& out) {
  if (text.empty()) return false;
  // strtod needs a terminated buffer; values are short.
  std::string buffer(text);
  char* end = nullptr;
  out = std::strtod(buffer.c_str(), &end);
  return end == buffer.c_str() + buffer.size() && std::isfinite(out);
}

std::string FormatDouble(double x) { return fmt::format("{:.17g}", x); }

}  // namespace

std::string_view ToString(DerClass der_class) {
  for (const auto& [value, name] : kDerNames) {
    if (value == der_class) return name;
  }
  return "unknown";
}

std::string_view ToString(FlexClass flex_class) {
  for (const auto& [value, name] : kFlexNames) {
    if (value == flex_class) return name;
  }
  return "unknown";
}

DerClass ParseDerClass(std::string_view text) {
  for (const auto& [value, name] : kDerNames) {
    if (name == text) return value;
  }
  throw ConfigError(fmt::format("unknown DER class '{}'", text));
}

FlexClass ParseFlexClass(std::string_view text) {
  for (const auto& [value, name] : kFlexNames) {
    if (name == text) return value;
  }
  throw ConfigError(fmt::format("unknown flexibility class '{}'", text));
}

FlexClass DefaultFlexClass(DerClass der_class) {
  switch (der_class) {
    case DerClass::kFixedLoad:
      return FlexClass::kNonInterruptible;
    case DerClass::kHvac:
    case DerClass::kPv:
      return FlexClass::kCurtailable;
    case DerClass::kEvCharger:
    case DerClass::kBattery:
      return FlexClass::kShiftable;
  }
  return FlexClass::kNonInterruptible;
}

CalendarHour ToCalendar(std::int64_t epoch_hours) {
  using namespace std::chrono;
  std::int64_t day_index = epoch_hours >= 0 ? epoch_hours / 24
                                            : -((-epoch_hours + 23) / 24);
  int hour = static_cast<int>(epoch_hours - day_index * 24);
  sys_days day{days{day_index}};
  year_month_day ymd{day};
  sys_days jan1{ymd.year() / January / 1};
  weekday wd{day};
  return CalendarHour{
      .year = static_cast<int>(ymd.year()),
      .day_of_year = static_cast<int>((day - jan1).count()) + 1,
      .hour = hour,
      .weekend = wd == Saturday || wd == Sunday,
  };
}

std::string FormatIsoHour(std::int64_t epoch_hours) {
  using namespace std::chrono;
  std::int64_t day_index = epoch_hours >= 0 ? epoch_hours / 24
                                            : -((-epoch_hours + 23) / 24);
  int hour = static_cast<int>(epoch_hours - day_index * 24);
  year_month_day ymd{sys_days{days{day_index}}};
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:00:00",
                     static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()), hour);
}

std::optional<std::int64_t> ParseIsoHour(std::string_view text) {
  using namespace std::chrono;
  if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
  if (text.size() < 13 || text[4] != '-' || text[7] != '-' ||
      (text[10] != 'T' && text[10] != ' ')) {
    return std::nullopt;
  }
  int y = 0;
  unsigned mo = 0, d = 0;
  int h = 0;
  if (!ParseInt(text.substr(0, 4), y) || !ParseInt(text.substr(5, 2), mo) ||
      !ParseInt(text.substr(8, 2), d) || !ParseInt(text.substr(11, 2), h)) {
    return std::nullopt;
  }
  std::string_view rest = text.substr(13);
  // Optional ":00" minutes and ":00" seconds.
  for (int part = 0; part < 2 && !rest.empty(); ++part) {
    int v = 0;
    if (rest.size() < 3 || rest[0] != ':' || !ParseInt(rest.substr(1, 2), v) ||
        v != 0) {
      return std::nullopt;
    }
    rest.remove_prefix(3);
  }
  if (!rest.empty() || h < 0 || h > 23) return std::nullopt;
  year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok()) return std::nullopt;
  std::int64_t day_index = sys_days{ymd}.time_since_epoch().count();
  return day_index * 24 + h;
}

void ClientDataset::Validate() const {
  if (series.step_hours < 1) {
    throw ShapeError(fmt::format("client {}: step_hours must be >= 1", client_id));
  }
  for (double v : series.values) {
    if (!std::isfinite(v)) {
      throw NumericError(fmt::format("client {}: non-finite value", client_id));
    }
  }
  for (const auto& c : covariates) {
    if (c.values.size() != series.size()) {
      throw ShapeError(fmt::format(
          "client {}: covariate '{}' has {} values, series has {}", client_id,
          c.name, c.values.size(), series.size()));
    }
  }
  if (archetype_id < -1) {
    throw ShapeError(fmt::format("client {}: archetype_id < -1", client_id));
  }
}

void AddCalendarCovariates(ClientDataset& dataset, int harmonics) {
  constexpr double kTwoPi = 6.283185307179586;
  for (int k = 1; k <= harmonics; ++k) {
    const std::string suffix = k == 1 ? "" : std::to_string(k);
    Covariate s{"hour_sin" + suffix, {}};
    Covariate c{"hour_cos" + suffix, {}};
    s.values.reserve(dataset.series.size());
    c.values.reserve(dataset.series.size());
    for (std::size_t i = 0; i < dataset.series.size(); ++i) {
      const int hour = ToCalendar(dataset.series.TimestampAt(i)).hour;
      s.values.push_back(std::sin(kTwoPi * k * hour / 24.0));
      c.values.push_back(std::cos(kTwoPi * k * hour / 24.0));
    }
    dataset.covariates.push_back(std::move(s));
    dataset.covariates.push_back(std::move(c));
  }
}

// ---------------------------------------------------------------------------

std::vector<ClientDataset> ParseCsv(std::string_view text,
                                    const CsvSchema& schema) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t nl = text.find('\n', start);
      if (nl == std::string_view::npos) nl = text.size();
      lines.push_back(text.substr(start, nl - start));
      start = nl + 1;
    }
  }
  if (lines.empty() || Trim(lines[0]).empty()) {
    throw SchemaError("CSV input has no header row");
  }

  std::vector<std::string_view> header = SplitFields(lines[0]);
  auto find_column = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  auto require_column = [&](const std::string& name) {
    auto idx = find_column(name);
    if (!idx) throw SchemaError(fmt::format("missing column '{}'", name));
    return *idx;
  };
  const std::size_t ts_col = require_column(schema.timestamp);
  const std::size_t id_col = require_column(schema.client_id);
  const std::size_t value_col = require_column(schema.value_kw);
  const auto feeder_col = find_column(schema.feeder_id);
  const auto der_col = find_column(schema.der_class);

  std::vector<std::size_t> covariate_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i == ts_col || i == id_col || i == value_col ||
        (feeder_col && i == *feeder_col) || (der_col && i == *der_col)) {
      continue;
    }
    covariate_cols.push_back(i);
  }

  struct Row {
    std::int64_t timestamp;
    double value;
    std::vector<double> covariates;
  };
  struct Pending {
    std::vector<Row> rows;
    std::string feeder_id;
    std::string der_class;
  };
  std::map<std::string, Pending> by_client;

  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (Trim(lines[li]).empty()) continue;
    const std::size_t line_no = li + 1;
    auto fields = SplitFields(lines[li]);
    if (fields.size() != header.size()) {
      throw ParseError(fmt::format("line {}: expected {} fields, found {}",
                                   line_no, header.size(), fields.size()));
    }
    auto ts = ParseIsoHour(fields[ts_col]);
    if (!ts) {
      throw ParseError(fmt::format("line {}: unparseable timestamp '{}'",
                                   line_no, fields[ts_col]));
    }
    Row row{*ts, 0.0, {}};
    if (!ParseDouble(fields[value_col], row.value)) {
      throw ParseError(fmt::format("line {}: unparseable value '{}'", line_no,
                                   fields[value_col]));
    }
    for (std::size_t c : covariate_cols) {
      double v = 0.0;
      if (!ParseDouble(fields[c], v)) {
        throw ParseError(fmt::format("line {}: unparseable {} '{}'", line_no,
                                     header[c], fields[c]));
      }
      row.covariates.push_back(v);
    }
    std::string client(fields[id_col]);
    if (client.empty()) {
      throw ParseError(fmt::format("line {}: empty client id", line_no));
    }
    Pending& pending = by_client[client];
    if (feeder_col) pending.feeder_id = std::string(fields[*feeder_col]);
    if (der_col) pending.der_class = std::string(fields[*der_col]);
    pending.rows.push_back(std::move(row));
  }

  std::vector<ClientDataset> out;
  for (auto& [client, pending] : by_client) {
    auto& rows = pending.rows;
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      return a.timestamp < b.timestamp;
    });
    ClientDataset ds;
    ds.client_id = client;
    ds.feeder_id = pending.feeder_id.empty() ? "feeder_0" : pending.feeder_id;
    if (!pending.der_class.empty()) {
      try {
        ds.der_class = ParseDerClass(pending.der_class);
      } catch (const ConfigError&) {
        throw ParseError(fmt::format("client {}: unknown der_class '{}'",
                                     client, pending.der_class));
      }
    }
    ds.flex_class = DefaultFlexClass(ds.der_class);
    ds.archetype_id = -1;
    ds.series.start_epoch_hours = rows.front().timestamp;
    ds.series.step_hours = 1;
    for (std::size_t c : covariate_cols) {
      ds.covariates.push_back(Covariate{std::string(header[c]), {}});
    }
    auto push = [&](const Row& r) {
      ds.series.values.push_back(r.value);
      for (std::size_t c = 0; c < covariate_cols.size(); ++c) {
        ds.covariates[c].values.push_back(r.covariates[c]);
      }
    };
    push(rows.front());
    for (std::size_t i = 1; i < rows.size(); ++i) {
      std::int64_t prev = rows[i - 1].timestamp;
      std::int64_t cur = rows[i].timestamp;
      if (cur == prev) {
        throw GapError(fmt::format("client {}: duplicate timestamp {}", client,
                                   FormatIsoHour(cur)));
      }
      if (cur != prev + 1) {
        if (!schema.forward_fill) {
          throw GapError(fmt::format("client {}: missing hour {}", client,
                                     FormatIsoHour(prev + 1)));
        }
        for (std::int64_t t = prev + 1; t < cur; ++t) push(rows[i - 1]);
      }
      push(rows[i]);
    }
    out.push_back(std::move(ds));
  }
  return out;
}

std::vector<ClientDataset> LoadCsv(const std::filesystem::path& path,
                                   const CsvSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseCsv(buffer.str(), schema);
}

std::string FormatCsv(std::span<const ClientDataset> datasets) {
  std::vector<std::string> covariate_names;
  if (!datasets.empty()) {
    for (const auto& c : datasets.front().covariates) {
      covariate_names.push_back(c.name);
    }
  }
  std::string out = "timestamp,client_id,value_kw,feeder_id,der_class";
  for (const auto& name : covariate_names) out += "," + name;
  out += "\n";
  for (const auto& ds : datasets) {
    ds.Validate();
    if (ds.covariates.size() != covariate_names.size()) {
      throw ShapeError(fmt::format("client {}: covariate set differs",
                                   ds.client_id));
    }
    for (std::size_t c = 0; c < covariate_names.size(); ++c) {
      if (ds.covariates[c].name != covariate_names[c]) {
        throw ShapeError(fmt::format("client {}: covariate set differs",
                                     ds.client_id));
      }
    }
    for (std::size_t i = 0; i < ds.series.size(); ++i) {
      out += FormatIsoHour(ds.series.TimestampAt(i));
      out += ',';
      out += ds.client_id;
      out += ',';
      out += FormatDouble(ds.series.values[i]);
      out += ',';
      out += ds.feeder_id;
      out += ',';
      out += ToString(ds.der_class);
      for (const auto& c : ds.covariates) {
        out += ',';
        out += FormatDouble(c.values[i]);
      }
      out += '\n';
    }
  }
  return out;
}

void WriteCsv(const std::filesystem::path& path,
              std::span<const ClientDataset> datasets) {
  std::string text = FormatCsv(datasets);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << text;
}

}  // namespace derfl
