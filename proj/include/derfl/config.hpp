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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "derfl/data.hpp"
#include "derfl/eval.hpp"
#include "derfl/fedcore.hpp"

namespace derfl {

struct IngestConfig {
  std::filesystem::path path;
  CsvSchema schema;
};

// A fully validated experiment description. See README.md for every key.
struct ScenarioConfig {
  std::uint64_t seed = 0;
  std::optional<PopulationSpec> population;  // exactly one of population /
  std::optional<IngestConfig> ingest;        // ingest is set
  FlMode mode = FlMode::kGlobal;             // cluster.mode, used by `run`
  ComparisonConfig comparison;               // model, fl, cluster, dp, ...
  std::filesystem::path output_dir = "out";
};

// Parses the JSON config tree. Unknown keys and invalid values raise
// ConfigError naming the offending field path; relative paths are resolved
// against `base_dir`.
ScenarioConfig ParseConfigJson(const nlohmann::json& tree,
                               const std::filesystem::path& base_dir = {});
// Throws IoError if the file cannot be read, ConfigError if it is malformed.
ScenarioConfig ParseConfig(const std::filesystem::path& path);
nlohmann::json ReadConfigTree(const std::filesystem::path& path);

// Sets a dotted path (e.g. "dp.sigma") in a config tree, creating objects on
// the way. `value` is stored as an integer, a float or a string, whichever
// parses first.
void SetConfigValue(nlohmann::json& tree, std::string_view dotted_path,
                    std::string_view value);

// Population or ingested datasets for a scenario under `seed`.
std::vector<ClientDataset> LoadScenarioData(const ScenarioConfig& config, std::uint64_t seed);

}  // namespace derfl
