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

#include "derfl/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include <fmt/format.h>

#include "derfl/errors.hpp"
#include "derfl/rng.hpp"

namespace derfl {

namespace {

struct Offsets {
  std::size_t w1, b1, w2, b2, end;
};

Offsets OffsetsFor(const ModelSpec& spec) {
  const std::size_t d = spec.input_dim;
  const std::size_t h = spec.horizon;
  if (spec.kind == ModelKind::kLinear) {
    return Offsets{0, h * d, h * d + h, h * d + h, h * d + h};
  }
  const std::size_t m = spec.hidden_dim;
  Offsets o{};
  o.w1 = 0;
  o.b1 = m * d;
  o.w2 = o.b1 + m;
  o.b2 = o.w2 + h * m;
  o.end = o.b2 + h;
  return o;
}

void CheckBatch(const ModelParams& params, const SupervisedSet& set) {
  if (set.input_dim != params.spec.input_dim || set.horizon != params.spec.horizon) {
    throw ShapeError(fmt::format(
        "batch shape (d={}, h={}) does not match model (d={}, h={})", set.input_dim,
        set.horizon, params.spec.input_dim, params.spec.horizon));
  }
}

// Accumulates the loss and gradient contribution of one sample. `hidden` and
// `residual` are scratch buffers sized m and h.
double AccumulateSample(const ModelSpec& spec, const Offsets& o, const double* p,
                        std::span<const double> x, std::span<const double> y,
                        double scale, double* g, std::vector<double>& hidden,
                        std::vector<double>& residual) {
  const std::size_t d = spec.input_dim;
  const std::size_t h = spec.horizon;
  double sq = 0.0;
  if (spec.kind == ModelKind::kLinear) {
    for (std::size_t r = 0; r < h; ++r) {
      double out = p[o.b1 + r];
      const double* row = p + o.w1 + r * d;
      for (std::size_t c = 0; c < d; ++c) out += row[c] * x[c];
      const double e = out - y[r];
      sq += e * e;
      const double ge = 2.0 * e * scale;
      double* grow = g + o.w1 + r * d;
      for (std::size_t c = 0; c < d; ++c) grow[c] += ge * x[c];
      g[o.b1 + r] += ge;
    }
    return sq;
  }
  const std::size_t m = spec.hidden_dim;
  for (std::size_t j = 0; j < m; ++j) {
    double a = p[o.b1 + j];
    const double* row = p + o.w1 + j * d;
    for (std::size_t c = 0; c < d; ++c) a += row[c] * x[c];
    hidden[j] = std::tanh(a);
  }
  for (std::size_t r = 0; r < h; ++r) {
    double out = p[o.b2 + r];
    const double* row = p + o.w2 + r * m;
    for (std::size_t j = 0; j < m; ++j) out += row[j] * hidden[j];
    const double e = out - y[r];
    sq += e * e;
    residual[r] = 2.0 * e * scale;
  }
  for (std::size_t r = 0; r < h; ++r) {
    double* grow = g + o.w2 + r * m;
    for (std::size_t j = 0; j < m; ++j) grow[j] += residual[r] * hidden[j];
    g[o.b2 + r] += residual[r];
  }
  for (std::size_t j = 0; j < m; ++j) {
    double back = 0.0;
    for (std::size_t r = 0; r < h; ++r) back += p[o.w2 + r * m + j] * residual[r];
    const double da = back * (1.0 - hidden[j] * hidden[j]);
    double* grow = g + o.w1 + j * d;
    for (std::size_t c = 0; c < d; ++c) grow[c] += da * x[c];
    g[o.b1 + j] += da;
  }
  return sq;
}

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void PutU64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t GetLe(std::span<const std::uint8_t> bytes, std::size_t at, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(bytes[at + static_cast<std::size_t>(i)]) << (8 * i);
  }
  return v;
}

}  // namespace

std::string_view ToString(ModelKind kind) {
  return kind == ModelKind::kLinear ? "linear" : "mlp";
}

ModelKind ParseModelKind(std::string_view text) {
  if (text == "linear") return ModelKind::kLinear;
  if (text == "mlp") return ModelKind::kMlp;
  throw ConfigError(fmt::format("unknown model kind '{}'", text));
}

std::size_t ModelSpec::ParamCount() const { return OffsetsFor(*this).end; }

void ModelSpec::Validate() const {
  if (input_dim < 1) throw ConfigError("model input_dim must be >= 1");
  if (horizon < 1) throw ConfigError("model horizon must be >= 1");
  if (kind == ModelKind::kMlp && hidden_dim < 1) {
    throw ConfigError("mlp hidden_dim must be >= 1");
  }
}

void CheckParams(const ModelParams& params) {
  const std::size_t expected = params.spec.ParamCount();
  if (params.values.size() != expected) {
    throw ShapeError(fmt::format("parameter vector has {} values, spec needs {}",
                                 params.values.size(), expected));
  }
}

LayerWeights Unflatten(const ModelParams& params) {
  CheckParams(params);
  const Offsets o = OffsetsFor(params.spec);
  auto take = [&](std::size_t a, std::size_t b) {
    return std::vector<double>(params.values.begin() + static_cast<std::ptrdiff_t>(a),
                               params.values.begin() + static_cast<std::ptrdiff_t>(b));
  };
  LayerWeights layers;
  layers.w1 = take(o.w1, o.b1);
  layers.b1 = take(o.b1, o.w2);
  layers.w2 = take(o.w2, o.b2);
  layers.b2 = take(o.b2, o.end);
  return layers;
}

ModelParams Flatten(const ModelSpec& spec, const LayerWeights& layers) {
  ModelParams params{spec, {}};
  params.values.reserve(spec.ParamCount());
  for (const auto* part : {&layers.w1, &layers.b1, &layers.w2, &layers.b2}) {
    params.values.insert(params.values.end(), part->begin(), part->end());
  }
  CheckParams(params);
  return params;
}

ModelParams InitParams(const ModelSpec& spec, std::uint64_t seed) {
  spec.Validate();
  const Offsets o = OffsetsFor(spec);
  ModelParams params{spec, std::vector<double>(o.end, 0.0)};
  Rng rng(seed);
  auto fill = [&](std::size_t begin, std::size_t end, std::size_t fan_in,
                  std::size_t fan_out) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = begin; i < end; ++i) params.values[i] = rng.Uniform(-s, s);
  };
  if (spec.kind == ModelKind::kLinear) {
    fill(o.w1, o.b1, spec.input_dim, spec.horizon);
  } else {
    fill(o.w1, o.b1, spec.input_dim, spec.hidden_dim);
    fill(o.w2, o.b2, spec.hidden_dim, spec.horizon);
  }
  return params;
}

std::vector<double> Predict(const ModelParams& params, std::span<const double> x) {
  CheckParams(params);
  const ModelSpec& spec = params.spec;
  if (x.size() != spec.input_dim) {
    throw ShapeError(fmt::format("input has {} values, model expects {}", x.size(),
                                 spec.input_dim));
  }
  const Offsets o = OffsetsFor(spec);
  const double* p = params.values.data();
  const std::size_t d = spec.input_dim;
  std::vector<double> out(spec.horizon);
  if (spec.kind == ModelKind::kLinear) {
    for (std::size_t r = 0; r < spec.horizon; ++r) {
      double acc = p[o.b1 + r];
      for (std::size_t c = 0; c < d; ++c) acc += p[o.w1 + r * d + c] * x[c];
      out[r] = acc;
    }
    return out;
  }
  const std::size_t m = spec.hidden_dim;
  std::vector<double> hidden(m);
  for (std::size_t j = 0; j < m; ++j) {
    double a = p[o.b1 + j];
    for (std::size_t c = 0; c < d; ++c) a += p[o.w1 + j * d + c] * x[c];
    hidden[j] = std::tanh(a);
  }
  for (std::size_t r = 0; r < spec.horizon; ++r) {
    double acc = p[o.b2 + r];
    for (std::size_t j = 0; j < m; ++j) acc += p[o.w2 + r * m + j] * hidden[j];
    out[r] = acc;
  }
  return out;
}

std::vector<double> PredictAll(const ModelParams& params, const SupervisedSet& set) {
  CheckBatch(params, set);
  std::vector<double> out;
  out.reserve(set.size() * set.horizon);
  for (std::size_t i = 0; i < set.size(); ++i) {
    auto row = Predict(params, set.Input(i));
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

LossAndGrad ComputeLossAndGrad(const ModelParams& params, const SupervisedSet& set,
                               std::span<const std::size_t> rows) {
  CheckParams(params);
  CheckBatch(params, set);
  if (rows.empty()) throw InsufficientDataError("loss over an empty batch");
  const ModelSpec& spec = params.spec;
  const Offsets o = OffsetsFor(spec);
  LossAndGrad out{0.0, std::vector<double>(o.end, 0.0)};
  const double scale = 1.0 / static_cast<double>(rows.size() * spec.horizon);
  std::vector<double> hidden(spec.hidden_dim);
  std::vector<double> residual(spec.horizon);
  double total = 0.0;
  for (std::size_t row : rows) {
    total += AccumulateSample(spec, o, params.values.data(), set.Input(row),
                              set.Target(row), scale, out.grad.data(), hidden, residual);
  }
  out.loss = total * scale;
  return out;
}

LossAndGrad ComputeLossAndGrad(const ModelParams& params, const SupervisedSet& batch) {
  std::vector<std::size_t> rows(batch.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return ComputeLossAndGrad(params, batch, rows);
}

double ComputeLoss(const ModelParams& params, const SupervisedSet& set) {
  if (set.empty()) throw InsufficientDataError("loss over an empty set");
  std::vector<double> pred = PredictAll(params, set);
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - set.targets[i];
    total += e * e;
  }
  return total / static_cast<double>(pred.size());
}

std::uint64_t ParamBytes(std::size_t param_count, std::size_t header_bytes) {
  return static_cast<std::uint64_t>(param_count) * 8 + header_bytes;
}

std::uint64_t ParamBytes(const ModelSpec& spec) { return ParamBytes(spec.ParamCount()); }

std::vector<std::uint8_t> SerializeParams(const ModelParams& params) {
  CheckParams(params);
  std::vector<std::uint8_t> out;
  out.reserve(ParamBytes(params.spec));
  for (char c : {'D', 'F', 'L', 'P'}) out.push_back(static_cast<std::uint8_t>(c));
  PutU32(out, 1);
  PutU32(out, params.spec.kind == ModelKind::kLinear ? 0 : 1);
  PutU32(out, static_cast<std::uint32_t>(params.spec.input_dim));
  PutU32(out, static_cast<std::uint32_t>(params.spec.hidden_dim));
  PutU32(out, static_cast<std::uint32_t>(params.spec.horizon));
  PutU64(out, params.values.size());
  for (double v : params.values) PutU64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

ModelParams DeserializeParams(std::span<const std::uint8_t> blob) {
  if (blob.size() < kParamHeaderBytes || std::memcmp(blob.data(), "DFLP", 4) != 0) {
    throw ShapeError("parameter blob has no valid header");
  }
  if (GetLe(blob, 4, 4) != 1) throw ShapeError("unsupported parameter blob version");
  ModelParams params;
  const std::uint64_t kind = GetLe(blob, 8, 4);
  if (kind > 1) throw ShapeError("unknown model kind in parameter blob");
  params.spec.kind = kind == 0 ? ModelKind::kLinear : ModelKind::kMlp;
  params.spec.input_dim = GetLe(blob, 12, 4);
  params.spec.hidden_dim = GetLe(blob, 16, 4);
  params.spec.horizon = GetLe(blob, 20, 4);
  const std::uint64_t count = GetLe(blob, 24, 8);
  if (blob.size() != kParamHeaderBytes + count * 8) {
    throw ShapeError("parameter blob length does not match its header");
  }
  params.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    params.values[i] = std::bit_cast<double>(GetLe(blob, kParamHeaderBytes + 8 * i, 8));
  }
  CheckParams(params);
  return params;
}

double L2Norm(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

bool AllFinite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace derfl
