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

#include "derfl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "derfl/errors.hpp"
#include "derfl/rng.hpp"

namespace derfl {

namespace {

using nlohmann::json;

// A JSON object being consumed. Every key read is recorded so Finish() can
// reject the ones nobody asked for.
class Block {
 public:
  Block(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(fmt::format("{} must be an object", Label()));
  }

  bool Has(const std::string& key) const { return node_.contains(key); }

  std::string Path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  std::optional<Block> Child(const std::string& key) {
    seen_.insert(key);
    if (!node_.contains(key)) return std::nullopt;
    return Block(node_.at(key), Path(key));
  }

  double Number(const std::string& key, double fallback) {
    seen_.insert(key);
    if (!node_.contains(key)) return fallback;
    const json& v = node_.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    }
    throw ConfigError(fmt::format("{} must be a number", Path(key)));
  }

  long long Integer(const std::string& key, long long fallback) {
    seen_.insert(key);
    if (!node_.contains(key)) return fallback;
    const json& v = node_.at(key);
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long long>(d);
    }
    throw ConfigError(fmt::format("{} must be an integer", Path(key)));
  }

  std::string String(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    if (!node_.contains(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_string()) throw ConfigError(fmt::format("{} must be a string", Path(key)));
    return v.get<std::string>();
  }

  template <typename Parse>
  auto Choice(const std::string& key, const std::string& fallback, Parse parse) {
    const std::string text = String(key, fallback);
    try {
      return parse(text);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}: {}", Path(key), e.what()));
    }
  }

  bool Bool(const std::string& key, bool fallback) {
    seen_.insert(key);
    if (!node_.contains(key)) return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean()) throw ConfigError(fmt::format("{} must be true or false", Path(key)));
    return v.get<bool>();
  }

  const json& Raw(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }

  void Finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.contains(key)) {
        throw ConfigError(fmt::format("unknown key '{}'", Path(key)));
      }
    }
  }

 private:
  std::string Label() const { return path_.empty() ? "config" : path_; }

  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename... Args>
void Require(bool ok, fmt::format_string<Args...> format, Args&&... args) {
  if (!ok) throw ConfigError(fmt::format(format, std::forward<Args>(args)...));
}

int CheckedInt(Block& b, const std::string& key, long long fallback, long long min) {
  const long long v = b.Integer(key, fallback);
  Require(v >= min && v <= std::numeric_limits<int>::max(), "{} must be >= {}", b.Path(key),
          min);
  return static_cast<int>(v);
}

PopulationSpec ParsePopulation(Block b) {
  PopulationSpec spec;
  spec.n_clients = CheckedInt(b, "n_clients", spec.n_clients, 1);
  spec.n_archetypes = CheckedInt(b, "n_archetypes", spec.n_archetypes, 1);
  Require(spec.n_archetypes <= spec.n_clients, "{} must be <= population.n_clients",
          b.Path("n_archetypes"));
  spec.heterogeneity = b.Number("heterogeneity", spec.heterogeneity);
  Require(spec.heterogeneity >= 0.0 && spec.heterogeneity <= 1.0, "{} must be in [0, 1]",
          b.Path("heterogeneity"));
  spec.days = CheckedInt(b, "days", spec.days, 1);
  spec.feeders = CheckedInt(b, "feeders", spec.feeders, 1);
  spec.harmonics = CheckedInt(b, "harmonics", spec.harmonics, 0);
  Require(spec.harmonics <= 2, "{} must be in [0, 2]", b.Path("harmonics"));
  spec.ar_coef = b.Number("ar_coef", spec.ar_coef);
  Require(spec.ar_coef > -1.0 && spec.ar_coef < 1.0, "{} must be in (-1, 1)", b.Path("ar_coef"));
  spec.noise_std = b.Number("noise_std", spec.noise_std);
  Require(spec.noise_std >= 0.0 && std::isfinite(spec.noise_std), "{} must be >= 0",
          b.Path("noise_std"));
  const std::string start = b.String("start", "");
  if (!start.empty()) {
    auto hours = ParseIsoHour(start);
    Require(hours.has_value(), "{} is not an ISO-8601 hour", b.Path("start"));
    spec.start_epoch_hours = *hours;
  }
  if (auto mix = b.Child("der_mix")) {
    spec.der_mix.clear();
    for (const auto& [name, value] : b.Raw("der_mix").items()) {
      DerClass der_class;
      try {
        der_class = ParseDerClass(name);
      } catch (const ConfigError&) {
        throw ConfigError(fmt::format("unknown key '{}'", mix->Path(name)));
      }
      spec.der_mix[der_class] = mix->Number(name, 0.0);
      Require(spec.der_mix[der_class] >= 0.0, "{} must be >= 0", mix->Path(name));
    }
    mix->Finish();
  }
  if (auto shift = b.Child("shift_changepoint")) {
    ShiftChangepoint cp;
    cp.day = CheckedInt(*shift, "day", 0, 0);
    cp.magnitude = shift->Number("magnitude", 0.0);
    Require(cp.magnitude > -1.0 && std::isfinite(cp.magnitude), "{} must be > -1",
            shift->Path("magnitude"));
    shift->Finish();
    spec.shift_changepoint = cp;
  }
  b.Finish();
  spec.Validate();
  return spec;
}

IngestConfig ParseIngest(Block b, const std::filesystem::path& base_dir) {
  IngestConfig ingest;
  const std::string path = b.String("path", "");
  Require(!path.empty(), "{} is required", b.Path("path"));
  ingest.path = std::filesystem::path(path);
  if (ingest.path.is_relative()) ingest.path = base_dir / ingest.path;
  ingest.schema.forward_fill = b.Bool("forward_fill", false);
  if (auto cols = b.Child("columns")) {
    ingest.schema.timestamp = cols->String("timestamp", ingest.schema.timestamp);
    ingest.schema.client_id = cols->String("client_id", ingest.schema.client_id);
    ingest.schema.value_kw = cols->String("value_kw", ingest.schema.value_kw);
    ingest.schema.feeder_id = cols->String("feeder_id", ingest.schema.feeder_id);
    ingest.schema.der_class = cols->String("der_class", ingest.schema.der_class);
    cols->Finish();
  }
  b.Finish();
  return ingest;
}

}  // namespace

ScenarioConfig ParseConfigJson(const nlohmann::json& tree,
                               const std::filesystem::path& base_dir) {
  Block root(tree, "");
  ScenarioConfig config;
  const long long seed = root.Integer("seed", 0);
  Require(seed >= 0, "seed must be >= 0");
  config.seed = static_cast<std::uint64_t>(seed);
  const std::string out = root.String("output_dir", "out");
  config.output_dir = std::filesystem::path(out);
  if (config.output_dir.is_relative()) config.output_dir = base_dir / config.output_dir;

  auto population = root.Child("population");
  auto ingest = root.Child("ingest");
  Require(population.has_value() != ingest.has_value(),
          "exactly one of 'population' or 'ingest' is required");
  if (population) config.population = ParsePopulation(*population);
  if (ingest) config.ingest = ParseIngest(*ingest, base_dir);

  ComparisonConfig& cmp = config.comparison;
  auto model = root.Child("model");
  Require(model.has_value(), "'model' block is required");
  cmp.model_kind = model->Choice("kind", "linear", ParseModelKind);
  cmp.hidden_dim = static_cast<std::size_t>(CheckedInt(*model, "hidden_dim", 16, 1));
  cmp.lag = static_cast<std::size_t>(CheckedInt(*model, "lag", 24, 1));
  cmp.horizon = static_cast<std::size_t>(CheckedInt(*model, "horizon", 1, 1));
  cmp.calendar_features = model->Bool("calendar_features", true);
  model->Finish();

  auto fl_block = root.Child("fl");
  Require(fl_block.has_value(), "'fl' block is required");
  FLConfig& fl = cmp.fl;
  fl.rounds = CheckedInt(*fl_block, "rounds", fl.rounds, 1);
  fl.local_epochs = CheckedInt(*fl_block, "local_epochs", fl.local_epochs, 0);
  fl.batch_size = static_cast<std::size_t>(CheckedInt(*fl_block, "batch_size", 0, 0));
  fl.participation = fl_block->Number("participation", fl.participation);
  Require(fl.participation > 0.0 && fl.participation <= 1.0, "fl.participation must be in (0, 1]");
  fl.early_stop_patience = CheckedInt(*fl_block, "early_stop_patience", 0, 0);
  fl.all_client_eval_every =
      CheckedInt(*fl_block, "all_client_eval_every", fl.all_client_eval_every, 1);
  cmp.scaling = fl_block->Choice("scaling", "per_client", ParseScalingMode);
  if (auto opt = fl_block->Child("optimizer")) {
    fl.optimizer.kind = opt->Choice("kind", "sgd", ParseOptimizerKind);
    fl.optimizer.lr = opt->Number("lr", fl.optimizer.lr);
    Require(fl.optimizer.lr > 0.0 && std::isfinite(fl.optimizer.lr),
            "fl.optimizer.lr must be > 0 (got {})", fl.optimizer.lr);
    fl.optimizer.beta = opt->Number("beta", fl.optimizer.beta);
    Require(fl.optimizer.beta >= 0.0 && fl.optimizer.beta < 1.0,
            "fl.optimizer.beta must be in [0, 1)");
    opt->Finish();
  }
  fl_block->Finish();

  if (root.Has("methods")) {
    const json& list = root.Raw("methods");
    Require(list.is_array() && !list.empty(), "methods must be a non-empty list");
    cmp.methods.clear();
    for (const auto& m : list) {
      Require(m.is_string(), "methods entries must be strings");
      try {
        cmp.methods.push_back(ParseMethod(m.get<std::string>()));
      } catch (const ConfigError&) {
        throw ConfigError(fmt::format("methods: unknown method '{}'", m.get<std::string>()));
      }
    }
  }
  auto uses = [&](Method a, Method b) {
    for (Method m : cmp.methods) {
      if (m == a || m == b) return true;
    }
    return false;
  };

  if (auto cluster = root.Child("cluster")) {
    config.mode = cluster->Choice("mode", "global", ParseFlMode);
    cmp.cluster.tau = cluster->Number("tau", cmp.cluster.tau);
    cmp.cluster.warmup_rounds = CheckedInt(*cluster, "warmup_rounds", cmp.cluster.warmup_rounds, 0);
    cmp.cluster.k = static_cast<int>(cluster->Integer("k", cmp.cluster.k));
    cmp.cluster.recluster_every = CheckedInt(*cluster, "recluster_every", 0, 0);
    cluster->Finish();
  }
  if (config.mode == FlMode::kIfca || uses(Method::kIfca, Method::kIfcaPersonalized)) {
    Require(cmp.cluster.k >= 1, "cluster.k must be >= 1 when ifca is used");
  }
  if (config.mode == FlMode::kHc || uses(Method::kHc, Method::kHcPersonalized)) {
    Require(cmp.cluster.tau > 0.0, "cluster.tau must be > 0 when hc is used");
  }
  if (config.population) {
    Require(cmp.cluster.k <= config.population->n_clients,
            "cluster.k must be <= population.n_clients");
  }

  if (auto dp = root.Child("dp")) {
    DpConfig d;
    d.clip_norm = dp->Number("clip_norm", d.clip_norm);
    Require(d.clip_norm > 0.0, "dp.clip_norm must be > 0");
    d.sigma = dp->Number("sigma", d.sigma);
    Require(d.sigma >= 0.0 && std::isfinite(d.sigma), "dp.sigma must be >= 0");
    Require(d.sigma == 0.0 || std::isfinite(d.clip_norm),
            "dp.sigma > 0 needs a finite dp.clip_norm");
    const bool enabled = dp->Bool("enabled", true);
    dp->Finish();
    if (enabled) cmp.dp = d;
  }

  if (auto p = root.Child("personalization")) {
    cmp.personalization.epochs = CheckedInt(*p, "epochs", cmp.personalization.epochs, 0);
    cmp.personalization.lr_scale = p->Number("lr_scale", cmp.personalization.lr_scale);
    Require(cmp.personalization.lr_scale > 0.0, "personalization.lr_scale must be > 0");
    p->Finish();
  }
  root.Finish();

  fl.Validate();
  cmp.cluster.Validate(config.mode);
  return config;
}

nlohmann::json ReadConfigTree(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read config '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

ScenarioConfig ParseConfig(const std::filesystem::path& path) {
  return ParseConfigJson(ReadConfigTree(path), path.parent_path());
}

void SetConfigValue(nlohmann::json& tree, std::string_view dotted_path, std::string_view value) {
  nlohmann::json* node = &tree;
  std::string_view rest = dotted_path;
  while (true) {
    const std::size_t dot = rest.find('.');
    const std::string key(rest.substr(0, dot));
    if (key.empty()) throw ConfigError(fmt::format("bad parameter path '{}'", dotted_path));
    if (!node->is_object()) {
      throw ConfigError(fmt::format("parameter path '{}' crosses a non-object", dotted_path));
    }
    if (dot == std::string_view::npos) {
      long long as_int = 0;
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), as_int);
      if (ec == std::errc() && p == value.data() + value.size()) {
        (*node)[key] = as_int;
        return;
      }
      double as_double = 0.0;
      std::string buffer(value);
      char* end = nullptr;
      as_double = std::strtod(buffer.c_str(), &end);
      if (!buffer.empty() && end == buffer.c_str() + buffer.size() && std::isfinite(as_double)) {
        (*node)[key] = as_double;
      } else if (value == "true" || value == "false") {
        (*node)[key] = value == "true";
      } else {
        (*node)[key] = std::string(value);
      }
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = nlohmann::json::object();
    rest = rest.substr(dot + 1);
  }
}

std::vector<ClientDataset> LoadScenarioData(const ScenarioConfig& config, std::uint64_t seed) {
  if (config.ingest) return LoadCsv(config.ingest->path, config.ingest->schema);
  PopulationSpec spec = *config.population;
  spec.seed = DeriveSeed(seed, "population");
  return GeneratePopulation(spec);
}

}  // namespace derfl
