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

#include "derfl/report.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "derfl/errors.hpp"

namespace derfl {

namespace {

using nlohmann::json;

void Indent(std::string& out, int depth) { out.append(static_cast<std::size_t>(depth) * 2, ' '); }

void Emit(const json& node, std::string& out, int depth) {
  switch (node.type()) {
    case json::value_t::object: {
      if (node.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : node.items()) {
        if (!first) out += ",\n";
        first = false;
        Indent(out, depth + 1);
        out += json(key).dump();
        out += ": ";
        Emit(value, out, depth + 1);
      }
      out += "\n";
      Indent(out, depth);
      out += "}";
      return;
    }
    case json::value_t::array: {
      if (node.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& value : node) {
        if (!first) out += ",\n";
        first = false;
        Indent(out, depth + 1);
        Emit(value, out, depth + 1);
      }
      out += "\n";
      Indent(out, depth);
      out += "]";
      return;
    }
    case json::value_t::number_float: {
      const double v = node.get<double>();
      out += std::isfinite(v) ? FormatDouble(v) : "null";
      return;
    }
    default:
      out += node.dump();
  }
}

std::string Optional(const std::optional<double>& value) {
  return value ? FormatDouble(*value) : std::string();
}

json OptionalJson(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

json SummaryJson(const MetricSummary& s) {
  return json{{"mae", s.mae},
              {"rmse", s.rmse},
              {"mape", OptionalJson(s.mape)},
              {"nrmse", OptionalJson(s.nrmse)},
              {"excluded_points", s.excluded_points}};
}

}  // namespace

std::string FormatDouble(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", value);
}

std::string DumpJson(const nlohmann::json& tree) {
  std::string out;
  Emit(tree, out, 0);
  out += "\n";
  return out;
}

PrivacyTuple PrivacyTupleFor(const std::optional<DpConfig>& dp, const FLConfig& fl) {
  PrivacyTuple tuple;
  tuple.clip_norm = dp ? dp->clip_norm : std::numeric_limits<double>::infinity();
  tuple.sigma = dp ? dp->sigma : 0.0;
  tuple.rounds = fl.rounds;
  tuple.participation = fl.participation;
  return tuple;
}

nlohmann::json ToJson(const PrivacyTuple& tuple) {
  return json{{"clip_norm", std::isinf(tuple.clip_norm) ? json("inf") : json(tuple.clip_norm)},
              {"sigma", tuple.sigma},
              {"rounds", tuple.rounds},
              {"participation", tuple.participation}};
}

nlohmann::json ToJson(const Metrics& m) {
  return json{{"mae", m.mae},
              {"rmse", m.rmse},
              {"mape", OptionalJson(m.mape)},
              {"nrmse", OptionalJson(m.nrmse)},
              {"excluded_points", m.excluded_points},
              {"n_points", m.n_points}};
}

std::string RoundsCsv(const RunResult& result) {
  std::string out =
      "round,val_loss,all_client_val_loss,bytes_up,bytes_down,n_participants,n_clusters\n";
  for (const RoundReport& r : result.reports) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r.round, FormatDouble(r.val_loss),
                       Optional(r.all_client_val_loss), r.bytes_up, r.bytes_down,
                       r.participants.size(), r.n_clusters);
  }
  return out;
}

nlohmann::json RunResultToJson(const RunResult& result) {
  json rounds = json::array();
  for (const RoundReport& r : result.reports) {
    json row{{"round", r.round},
             {"participants", r.participants},
             {"client_train_loss", r.client_train_loss},
             {"val_loss", r.val_loss},
             {"all_client_val_loss", OptionalJson(r.all_client_val_loss)},
             {"bytes_up", r.bytes_up},
             {"bytes_down", r.bytes_down},
             {"n_clusters", r.n_clusters}};
    if (!r.assignment.empty()) row["assignment"] = r.assignment;
    rounds.push_back(std::move(row));
  }
  std::uint64_t up = 0;
  std::uint64_t down = 0;
  for (const RoundReport& r : result.reports) {
    up += r.bytes_up;
    down += r.bytes_down;
  }
  const ModelSpec& spec = result.models.front().spec;
  return json{
      {"mode", std::string(ToString(result.mode))},
      {"seed", result.seed},
      {"model",
       {{"kind", std::string(ToString(spec.kind))},
        {"input_dim", spec.input_dim},
        {"hidden_dim", spec.hidden_dim},
        {"horizon", spec.horizon},
        {"param_count", spec.ParamCount()}}},
      {"privacy", ToJson(PrivacyTupleFor(result.options.dp, result.config))},
      {"rounds_run", result.reports.size()},
      {"best_round", result.best_round},
      {"best_val_loss", result.best_val_loss},
      {"bytes_up", up},
      {"bytes_down", down},
      {"total_bytes", result.TotalBytes()},
      {"n_models", result.models.size()},
      {"assignment", result.assignment},
      {"rounds", std::move(rounds)},
  };
}

std::string ComparisonCsv(const ComparisonTable& table) {
  std::string out =
      "method,n_clients,training_samples,"
      "client_mean_mae,client_mean_rmse,client_mean_mape,client_mean_nrmse,"
      "client_median_mae,client_median_rmse,client_median_mape,client_median_nrmse,"
      "feeder_mean_mae,feeder_mean_rmse,feeder_mean_mape,feeder_mean_nrmse,"
      "excluded_points,total_bytes,rounds_to_best,rounds_run\n";
  for (const MethodRow& row : table.rows) {
    auto summary = [](const MetricSummary& s) {
      return fmt::format("{},{},{},{}", FormatDouble(s.mae), FormatDouble(s.rmse),
                         Optional(s.mape), Optional(s.nrmse));
    };
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", ToString(row.method), row.n_clients,
                       row.training_samples, summary(row.client_mean),
                       summary(row.client_median), summary(row.feeder_mean),
                       row.client_mean.excluded_points, row.total_bytes, row.rounds_to_best,
                       row.rounds_run);
  }
  return out;
}

nlohmann::json ComparisonToJson(const ComparisonTable& table, const PrivacyTuple& privacy) {
  json rows = json::array();
  for (const MethodRow& row : table.rows) {
    rows.push_back(json{{"method", std::string(ToString(row.method))},
                        {"n_clients", row.n_clients},
                        {"training_samples", row.training_samples},
                        {"client_mean", SummaryJson(row.client_mean)},
                        {"client_median", SummaryJson(row.client_median)},
                        {"feeder_mean", SummaryJson(row.feeder_mean)},
                        {"client_mae", row.client_mae},
                        {"total_bytes", row.total_bytes},
                        {"rounds_to_best", row.rounds_to_best},
                        {"rounds_run", row.rounds_run}});
  }
  return json{{"seed", table.seed}, {"privacy", ToJson(privacy)}, {"rows", std::move(rows)}};
}

std::string TradeoffCsv(const std::string& param, const std::vector<SweepPoint>& points) {
  std::string out =
      "param,value,method,clip_norm,sigma,rounds,participation,"
      "client_mean_mae,client_median_mae,client_mean_rmse,feeder_mean_mae,total_bytes\n";
  for (const SweepPoint& point : points) {
    for (const MethodRow& row : point.table.rows) {
      out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", param, point.value,
                         ToString(row.method), FormatDouble(point.privacy.clip_norm),
                         FormatDouble(point.privacy.sigma), point.privacy.rounds,
                         FormatDouble(point.privacy.participation),
                         FormatDouble(row.client_mean.mae), FormatDouble(row.client_median.mae),
                         FormatDouble(row.client_mean.rmse), FormatDouble(row.feeder_mean.mae),
                         row.total_bytes);
    }
  }
  return out;
}

void WriteTextFile(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) {
    throw IoError(fmt::format("cannot create directory '{}': {}", path.parent_path().string(),
                              ec.message()));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << content;
  out.close();
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

}  // namespace derfl
