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

#include "derfl/cli.hpp"

#include <cctype>
#include <charconv>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "derfl/config.hpp"
#include "derfl/errors.hpp"
#include "derfl/report.hpp"

namespace derfl {

namespace {

struct Options {
  std::string config;
  std::string out;
  std::string method;
  std::string seeds;
  std::string param;
  std::string values;
  std::optional<std::uint64_t> seed;
};

std::uint64_t ParseSeed(std::string_view text) {
  std::uint64_t value = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || p != text.data() + text.size()) {
    throw ConfigError(fmt::format("bad seed '{}'", text));
  }
  return value;
}

std::vector<std::string> SplitList(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? text.size() : comma;
    std::string item(text.substr(start, end - start));
    if (item.empty()) throw ConfigError(fmt::format("empty entry in list '{}'", text));
    out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::filesystem::path OutputDir(const ScenarioConfig& config, const Options& opts) {
  return opts.out.empty() ? config.output_dir : std::filesystem::path(opts.out);
}

int Generate(const Options& opts, std::ostream& out) {
  const ScenarioConfig config = ParseConfig(opts.config);
  const std::uint64_t seed = opts.seed.value_or(config.seed);
  const auto datasets = LoadScenarioData(config, seed);
  const auto path = OutputDir(config, opts) / "dataset.csv";
  WriteTextFile(path, FormatCsv(datasets));
  out << fmt::format("wrote {} ({} clients)\n", path.string(), datasets.size());
  return 0;
}

FlMode RunMode(const ScenarioConfig& config, const std::string& method) {
  if (method.empty()) return config.mode;
  if (method == "fedavg" || method == "global") return FlMode::kGlobal;
  if (method == "hc") return FlMode::kHc;
  if (method == "ifca") return FlMode::kIfca;
  throw ConfigError(fmt::format("--method must be fedavg, hc or ifca (got '{}')", method));
}

int Run(const Options& opts, std::ostream& out) {
  const ScenarioConfig config = ParseConfig(opts.config);
  const std::uint64_t seed = opts.seed.value_or(config.seed);
  const FlMode mode = RunMode(config, opts.method);
  const ComparisonConfig& cmp = config.comparison;
  if (mode == FlMode::kIfca) {
    if (cmp.cluster.k < 1) throw ConfigError("cluster.k must be >= 1 for ifca");
  }
  if (mode == FlMode::kHc && !(cmp.cluster.tau > 0.0)) {
    throw ConfigError("cluster.tau must be > 0 for hc");
  }

  const auto datasets = LoadScenarioData(config, seed);
  const std::vector<Client> clients = PrepareFederation(datasets, cmp);
  const ModelSpec spec = SpecFor(cmp, datasets);
  FLConfig fl = cmp.fl;
  fl.seed = seed;
  RunOptions options;
  options.mode = mode;
  options.cluster = cmp.cluster;
  options.dp = cmp.dp;
  const RunResult result = RunTraining(clients, spec, fl, options);

  nlohmann::json tree = RunResultToJson(result);
  nlohmann::json test = nlohmann::json::object();
  for (const Client& client : clients) {
    const TestForecast forecast = client.Forecast(result.ModelFor(client.id()));
    test[client.id()] = ToJson(ComputeMetrics(forecast.predicted_kw, forecast.actual_kw));
  }
  tree["test_metrics"] = std::move(test);

  const std::string stem = fmt::format("run_{}_seed{}", ToString(mode), seed);
  const auto dir = OutputDir(config, opts);
  WriteTextFile(dir / (stem + "_rounds.csv"), RoundsCsv(result));
  WriteTextFile(dir / (stem + ".json"), DumpJson(tree));
  out << fmt::format("{}: {} rounds, best round {}, {} bytes; wrote {}\n", ToString(mode),
                     result.reports.size(), result.best_round, result.TotalBytes(),
                     (dir / stem).string());
  return 0;
}

void WriteTable(const std::filesystem::path& dir, const std::string& stem,
                const ComparisonTable& table, const PrivacyTuple& privacy) {
  WriteTextFile(dir / (stem + ".csv"), ComparisonCsv(table));
  WriteTextFile(dir / (stem + ".json"), DumpJson(ComparisonToJson(table, privacy)));
}

int Compare(const Options& opts, std::ostream& out) {
  const ScenarioConfig config = ParseConfig(opts.config);
  std::vector<std::uint64_t> seeds;
  if (!opts.seeds.empty()) {
    seeds = ParseSeedList(opts.seeds);
  } else {
    seeds.push_back(opts.seed.value_or(config.seed));
  }
  const auto dir = OutputDir(config, opts);
  const PrivacyTuple privacy = PrivacyTupleFor(config.comparison.dp, config.comparison.fl);
  for (std::uint64_t seed : seeds) {
    const auto datasets = LoadScenarioData(config, seed);
    const ComparisonTable table = RunComparison(datasets, config.comparison, seed);
    const std::string stem = fmt::format("comparison_seed{}", seed);
    WriteTable(dir, stem, table, privacy);
    out << fmt::format("seed {}: {} methods; wrote {}.csv/.json\n", seed, table.rows.size(),
                       (dir / stem).string());
  }
  return 0;
}

std::string FileSafe(std::string text) {
  for (char& c : text) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_';
    if (!ok) c = '_';
  }
  return text;
}

int Sweep(const Options& opts, std::ostream& out) {
  if (opts.param.empty()) throw ConfigError("sweep needs --param");
  if (opts.values.empty()) throw ConfigError("sweep needs --values");
  const std::filesystem::path config_path(opts.config);
  const nlohmann::json base_tree = ReadConfigTree(config_path);
  const ScenarioConfig base = ParseConfigJson(base_tree, config_path.parent_path());
  const std::uint64_t seed = opts.seed.value_or(base.seed);
  const auto dir = OutputDir(base, opts);

  // Parse every grid point up front so a bad value fails before any training.
  std::vector<std::pair<std::string, ScenarioConfig>> grid;
  for (const std::string& value : SplitList(opts.values)) {
    nlohmann::json tree = base_tree;
    SetConfigValue(tree, opts.param, value);
    try {
      grid.emplace_back(value, ParseConfigJson(tree, config_path.parent_path()));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}={}: {}", opts.param, value, e.what()));
    }
  }

  std::vector<SweepPoint> points;
  for (const auto& [value, config] : grid) {
    const auto datasets = LoadScenarioData(config, seed);
    SweepPoint point;
    point.value = value;
    point.privacy = PrivacyTupleFor(config.comparison.dp, config.comparison.fl);
    point.table = RunComparison(datasets, config.comparison, seed);
    const std::string stem =
        fmt::format("sweep_{}_{}_seed{}", FileSafe(opts.param), FileSafe(value), seed);
    WriteTable(dir, stem, point.table, point.privacy);
    out << fmt::format("{}={}: wrote {}.csv/.json\n", opts.param, value, (dir / stem).string());
    points.push_back(std::move(point));
  }
  const auto tradeoff =
      dir / fmt::format("tradeoff_{}_seed{}.csv", FileSafe(opts.param), seed);
  WriteTextFile(tradeoff, TradeoffCsv(opts.param, points));
  out << fmt::format("wrote {}\n", tradeoff.string());
  return 0;
}

}  // namespace

std::vector<std::uint64_t> ParseSeedList(std::string_view text) {
  std::vector<std::uint64_t> seeds;
  for (const std::string& item : SplitList(text)) {
    const std::size_t dots = item.find("..");
    if (dots == std::string::npos) {
      seeds.push_back(ParseSeed(item));
      continue;
    }
    const std::uint64_t lo = ParseSeed(std::string_view(item).substr(0, dots));
    const std::uint64_t hi = ParseSeed(std::string_view(item).substr(dots + 2));
    if (hi < lo) throw ConfigError(fmt::format("bad seed range '{}'", item));
    if (hi - lo > 100000) throw ConfigError(fmt::format("seed range '{}' is too long", item));
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  return seeds;
}

int Execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Federated forecasting experiments for distributed energy resources", "derfl"};
  app.require_subcommand(1);
  Options opts;

  auto* generate = app.add_subcommand("generate", "Write a synthetic population as dataset.csv");
  auto* run = app.add_subcommand("run", "Train one federated method and write its rounds");
  auto* compare = app.add_subcommand("compare", "Run the method comparison for one or more seeds");
  auto* sweep = app.add_subcommand("sweep", "Repeat the comparison over one parameter's values");
  for (CLI::App* sub : {generate, run, compare, sweep}) {
    sub->add_option("--config", opts.config, "Scenario file (JSON)")->required();
    sub->add_option("--out", opts.out, "Output directory (overrides output_dir)");
  }
  run->add_option("--seed", opts.seed, "Master seed (defaults to the config's)");
  run->add_option("--method", opts.method, "fedavg, hc or ifca (defaults to cluster.mode)");
  generate->add_option("--seed", opts.seed, "Master seed (defaults to the config's)");
  compare->add_option("--seeds", opts.seeds, "Seeds: 1,2,3 or 1..10");
  compare->add_option("--seed", opts.seed, "A single seed");
  sweep->add_option("--param", opts.param, "Dotted config key, e.g. dp.sigma")->required();
  sweep->add_option("--values", opts.values, "Comma-separated values")->required();
  sweep->add_option("--seed", opts.seed, "Master seed (defaults to the config's)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (e.get_exit_code() == 0) return 0;
    return ExitCodeFor(ErrorKind::kConfig);
  }

  try {
    if (*generate) return Generate(opts, out);
    if (*run) return Run(opts, out);
    if (*compare) return Compare(opts, out);
    return Sweep(opts, out);
  } catch (const Error& e) {
    err << "error [" << ErrorKindName(e.kind()) << "]: " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace derfl
