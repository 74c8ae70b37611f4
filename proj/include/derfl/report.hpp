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

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "derfl/eval.hpp"
#include "derfl/fedcore.hpp"

namespace derfl {

// 17 significant digits; non-finite values print as nan / inf / -inf.
std::string FormatDouble(double value);

// JSON text with two-space indentation and every float printed with 17
// significant digits. Non-finite floats become null.
std::string DumpJson(const nlohmann::json& tree);

// The raw privacy tuple reported next to results in place of an (epsilon,
// delta) figure. Without DP, clip_norm is inf and sigma 0.
struct PrivacyTuple {
  double clip_norm = 0.0;
  double sigma = 0.0;
  int rounds = 0;
  double participation = 1.0;
};

PrivacyTuple PrivacyTupleFor(const std::optional<DpConfig>& dp, const FLConfig& fl);
nlohmann::json ToJson(const PrivacyTuple& tuple);
nlohmann::json ToJson(const Metrics& metrics);

// round,val_loss,all_client_val_loss,bytes_up,bytes_down,n_participants,n_clusters
std::string RoundsCsv(const RunResult& result);
nlohmann::json RunResultToJson(const RunResult& result);

std::string ComparisonCsv(const ComparisonTable& table);
nlohmann::json ComparisonToJson(const ComparisonTable& table, const PrivacyTuple& privacy);

struct SweepPoint {
  std::string value;
  PrivacyTuple privacy;
  ComparisonTable table;
};

// One line per (point, method) in sweep order.
std::string TradeoffCsv(const std::string& param, const std::vector<SweepPoint>& points);

// Writes `content` to `path`, creating parent directories. Throws IoError.
void WriteTextFile(const std::filesystem::path& path, const std::string& content);

}  // namespace derfl
