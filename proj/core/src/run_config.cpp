/*
 * Copyright 2026 The attrib Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "attrib/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "attrib/binary_io.hpp"
#include "attrib/error.hpp"
#include "attrib/rng.hpp"

namespace attrib {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw ConfigError(key + ": expected " + expected + ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    bad_value(key, value, "a real number");
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    bad_value(key, value, "a nonnegative integer");
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& value) {
  return static_cast<std::size_t>(to_u64(key, value));
}

Range<double> to_range(const std::string& key, const std::string& value) {
  const auto items = split_list(value);
  if (items.size() != 2) bad_value(key, value, "'lo,hi'");
  return {to_double(key, items[0]), to_double(key, items[1])};
}

std::string range_text(const Range<double>& r) {
  return format_real(r.lo) + "," + format_real(r.hi);
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename Access>
Field real(std::string key, Access access) {
  return {key, [access](const RunConfig& c) { return format_real(access(const_cast<RunConfig&>(c))); },
          [access, key](RunConfig& c, const std::string& v) { access(c) = to_double(key, v); }};
}

template <typename Access>
Field size(std::string key, Access access) {
  return {key,
          [access](const RunConfig& c) {
            return std::to_string(access(const_cast<RunConfig&>(c)));
          },
          [access, key](RunConfig& c, const std::string& v) { access(c) = to_size(key, v); }};
}

template <typename Access>
Field range(std::string key, Access access) {
  return {key, [access](const RunConfig& c) { return range_text(access(const_cast<RunConfig&>(c))); },
          [access, key](RunConfig& c, const std::string& v) { access(c) = to_range(key, v); }};
}

template <typename Access>
Field text(std::string key, Access access) {
  return {key, [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)); },
          [access](RunConfig& c, const std::string& v) { access(c) = trim(v); }};
}

EstimatorParams& est(RunConfig& c, EstimatorKind kind) { return c.estimator_params[kind]; }

const std::vector<Field>& registry() {
  using K = EstimatorKind;
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back(size("data.count", [](RunConfig& c) -> auto& { return c.data.count; }));
    f.push_back(real("data.balance", [](RunConfig& c) -> auto& { return c.data.balance; }));
    f.push_back(real("data.train_fraction",
                     [](RunConfig& c) -> auto& { return c.data.split.train_fraction; }));
    f.push_back(size("data.eval_count", [](RunConfig& c) -> auto& { return c.data.split.eval_count; }));
    f.push_back(text("data.manifest", [](RunConfig& c) -> auto& { return c.data.manifest; }));
    f.push_back(size("data.side", [](RunConfig& c) -> auto& { return c.data.scene.side; }));
    f.push_back(real("data.body_center_jitter",
                     [](RunConfig& c) -> auto& { return c.data.scene.body_center_jitter; }));
    f.push_back(range("data.body_semi_x", [](RunConfig& c) -> auto& { return c.data.scene.body_semi_x; }));
    f.push_back(range("data.body_semi_y", [](RunConfig& c) -> auto& { return c.data.scene.body_semi_y; }));
    f.push_back(range("data.body_intensity",
                      [](RunConfig& c) -> auto& { return c.data.scene.body_intensity; }));
    f.push_back(range("data.lung_offset_x",
                      [](RunConfig& c) -> auto& { return c.data.scene.lung_offset_x; }));
    f.push_back(range("data.lung_semi_x", [](RunConfig& c) -> auto& { return c.data.scene.lung_semi_x; }));
    f.push_back(range("data.lung_semi_y", [](RunConfig& c) -> auto& { return c.data.scene.lung_semi_y; }));
    f.push_back(range("data.lung_intensity",
                      [](RunConfig& c) -> auto& { return c.data.scene.lung_intensity; }));
    f.push_back(range("data.heart_radius", [](RunConfig& c) -> auto& { return c.data.scene.heart_radius; }));
    f.push_back({"data.vessel_count",
                 [](const RunConfig& c) {
                   return std::to_string(c.data.scene.vessel_count.lo) + "," +
                          std::to_string(c.data.scene.vessel_count.hi);
                 },
                 [](RunConfig& c, const std::string& v) {
                   const auto items = split_list(v);
                   if (items.size() != 2) bad_value("data.vessel_count", v, "'lo,hi'");
                   c.data.scene.vessel_count = {to_size("data.vessel_count", items[0]),
                                                to_size("data.vessel_count", items[1])};
                 }});
    f.push_back(range("data.vessel_radius",
                      [](RunConfig& c) -> auto& { return c.data.scene.vessel_radius; }));
    f.push_back(range("data.vessel_intensity",
                      [](RunConfig& c) -> auto& { return c.data.scene.vessel_intensity; }));
    f.push_back(real("data.contrast_delta",
                     [](RunConfig& c) -> auto& { return c.data.scene.contrast_delta; }));
    f.push_back(real("data.noise_sigma", [](RunConfig& c) -> auto& { return c.data.scene.noise_sigma; }));

    f.push_back({"model.layers",
                 [](const RunConfig& c) { return layer_stack_to_string(c.model.config.layers); },
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.model.config.layers = parse_layer_stack(v);
                   } catch (const Error& e) {
                     throw ConfigError(std::string("model.layers: ") + e.what());
                   }
                 }});
    f.push_back(real("model.learning_rate",
                     [](RunConfig& c) -> auto& { return c.model.config.learning_rate; }));
    f.push_back(real("model.momentum", [](RunConfig& c) -> auto& { return c.model.config.momentum; }));
    f.push_back(size("model.epochs", [](RunConfig& c) -> auto& { return c.model.config.epochs; }));
    f.push_back(size("model.batch_size", [](RunConfig& c) -> auto& { return c.model.config.batch_size; }));
    f.push_back(text("model.path", [](RunConfig& c) -> auto& { return c.model.path; }));

    f.push_back({"estimators.list",
                 [](const RunConfig& c) {
                   std::string out;
                   for (EstimatorKind k : c.estimators) {
                     out += (out.empty() ? "" : ",") + estimator_id(k);
                   }
                   return out;
                 },
                 [](RunConfig& c, const std::string& v) {
                   std::vector<EstimatorKind> list;
                   for (const std::string& id : split_list(v)) {
                     const auto kind = parse_estimator(id);
                     if (!kind) throw ConfigError("estimators.list: unknown estimator '" + id + "'");
                     if (std::find(list.begin(), list.end(), *kind) != list.end()) {
                       throw ConfigError("estimators.list: duplicate estimator '" + id + "'");
                     }
                     list.push_back(*kind);
                   }
                   c.estimators = std::move(list);
                 }});
    f.push_back(size("intgrad.steps",
                     [](RunConfig& c) -> auto& { return est(c, K::kIntegratedGradients).steps; }));
    f.push_back(size("intgrad_bw.steps",
                     [](RunConfig& c) -> auto& { return est(c, K::kIntegratedGradientsBW).steps; }));
    f.push_back(size("expected_grad.samples", [](RunConfig& c) -> auto& {
      return est(c, K::kExpectedGradients).reference_samples;
    }));
    f.push_back(size("smoothgrad.samples",
                     [](RunConfig& c) -> auto& { return est(c, K::kSmoothGrad).noise_samples; }));
    f.push_back(real("smoothgrad.sigma",
                     [](RunConfig& c) -> auto& { return est(c, K::kSmoothGrad).noise_sigma; }));
    f.push_back(size("smoothgrad_sq.samples",
                     [](RunConfig& c) -> auto& { return est(c, K::kSmoothGradSquared).noise_samples; }));
    f.push_back(real("smoothgrad_sq.sigma",
                     [](RunConfig& c) -> auto& { return est(c, K::kSmoothGradSquared).noise_sigma; }));
    f.push_back({"variants",
                 [](const RunConfig& c) {
                   std::string out;
                   for (Variant v : c.variants) out += (out.empty() ? "" : ",") + variant_name(v);
                   return out;
                 },
                 [](RunConfig& c, const std::string& v) {
                   std::vector<Variant> list;
                   for (const std::string& name : split_list(v)) {
                     const Variant variant = parse_variant(name);
                     if (std::find(list.begin(), list.end(), variant) != list.end()) {
                       throw ConfigError("variants: duplicate variant '" + name + "'");
                     }
                     list.push_back(variant);
                   }
                   c.variants = std::move(list);
                 }});

    f.push_back(real("metrics.fraction_step",
                     [](RunConfig& c) -> auto& { return c.metrics.fraction_step; }));
    f.push_back(size("metrics.roc_thresholds",
                     [](RunConfig& c) -> auto& { return c.metrics.roc_thresholds; }));
    f.push_back({"metrics.roc_normalization",
                 [](const RunConfig& c) {
                   return std::string(c.metrics.roc_normalization == RocNormalization::kMinMax
                                          ? "minmax"
                                          : "rank");
                 },
                 [](RunConfig& c, const std::string& v) {
                   const std::string t = trim(v);
                   if (t == "minmax") {
                     c.metrics.roc_normalization = RocNormalization::kMinMax;
                   } else if (t == "rank") {
                     c.metrics.roc_normalization = RocNormalization::kRank;
                   } else {
                     bad_value("metrics.roc_normalization", v, "'minmax' or 'rank'");
                   }
                 }});
    f.push_back({"metrics.dsc_percents",
                 [](const RunConfig& c) {
                   std::string out;
                   for (double p : c.metrics.dsc_percents) {
                     out += (out.empty() ? "" : ",") + format_real(p);
                   }
                   return out;
                 },
                 [](RunConfig& c, const std::string& v) {
                   std::vector<double> grid;
                   for (const std::string& item : split_list(v)) {
                     grid.push_back(to_double("metrics.dsc_percents", item));
                   }
                   c.metrics.dsc_percents = std::move(grid);
                 }});
    f.push_back(text("metrics.region_pooling",
                     [](RunConfig& c) -> auto& { return c.metrics.region_pooling; }));
    f.push_back(real("segmentation.k", [](RunConfig& c) -> auto& { return c.metrics.segmentation.k; }));
    f.push_back(size("segmentation.min_size",
                     [](RunConfig& c) -> auto& { return c.metrics.segmentation.min_size; }));
    f.push_back(real("segmentation.sigma",
                     [](RunConfig& c) -> auto& { return c.metrics.segmentation.sigma; }));

    f.push_back({"run.seed", [](const RunConfig& c) { return std::to_string(c.seed); },
                 [](RunConfig& c, const std::string& v) { c.seed = to_u64("run.seed", v); }});
    f.push_back({"run.out", [](const RunConfig& c) { return c.out.string(); },
                 [](RunConfig& c, const std::string& v) { c.out = trim(v); }});
    f.push_back(size("run.jobs", [](RunConfig& c) -> auto& { return c.jobs; }));
    return f;
  }();
  return fields;
}

const Field& field(const std::string& key) {
  for (const Field& f : registry()) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

template <typename Fn>
void rethrow_as_config(const std::string& what, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace

std::string variant_name(Variant variant) {
  return variant == Variant::kOriginal ? "original" : "absolute";
}

Variant parse_variant(const std::string& name) {
  if (name == "original") return Variant::kOriginal;
  if (name == "absolute") return Variant::kAbsolute;
  throw ConfigError("unknown variant '" + name + "' (expected original or absolute)");
}

PostprocessOps variant_ops(Variant variant) {
  PostprocessOps ops;
  ops.sign_invert_if_class0 = true;
  ops.absolute = variant == Variant::kAbsolute;
  return ops;
}

std::vector<double> MetricSettings::fraction_grid() const {
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / fraction_step));
  if (steps == 0 || std::abs(static_cast<double>(steps) * fraction_step - 1.0) > 1e-9) {
    throw ConfigError("metrics.fraction_step must divide 1 evenly, got " +
                      format_real(fraction_step));
  }
  std::vector<double> grid(steps + 1);
  for (std::size_t j = 0; j <= steps; ++j) {
    grid[j] = static_cast<double>(j) / static_cast<double>(steps);
  }
  return grid;
}

std::map<EstimatorKind, EstimatorParams> RunConfig::default_estimator_params() {
  std::map<EstimatorKind, EstimatorParams> params;
  for (EstimatorKind kind : all_estimators()) params[kind] = EstimatorParams{};
  params[EstimatorKind::kIntegratedGradientsBW].reference = ReferencePolicy::kBlackAndWhite;
  params[EstimatorKind::kExpectedGradients].reference = ReferencePolicy::kTrainingSet;
  return params;
}

EstimatorParams RunConfig::params_for(EstimatorKind kind) const {
  EstimatorParams p = estimator_params.at(kind);
  p.seed = derive_seed(seed, "attribute/" + estimator_id(kind));
  switch (kind) {
    case EstimatorKind::kIntegratedGradientsBW:
      p.reference = ReferencePolicy::kBlackAndWhite;
      break;
    case EstimatorKind::kExpectedGradients:
      p.reference = ReferencePolicy::kTrainingSet;
      break;
    default:
      p.reference = ReferencePolicy::kBlack;
      break;
  }
  return p;
}

void RunConfig::validate() {
  rethrow_as_config("data", [&] { data.scene.validate(); });
  if (data.count < 2) throw ConfigError("data.count must be at least 2");
  if (!(data.balance > 0.0 && data.balance < 1.0)) {
    throw ConfigError("data.balance must lie in (0, 1)");
  }
  if (!(data.split.train_fraction > 0.0 && data.split.train_fraction < 1.0)) {
    throw ConfigError("data.train_fraction must lie in (0, 1)");
  }
  const auto train_count = static_cast<std::size_t>(
      std::llround(static_cast<double>(data.count) * data.split.train_fraction));
  if (data.split.eval_count == 0 || train_count + data.split.eval_count > data.count) {
    throw ConfigError("data.eval_count must be between 1 and the held-out sample count (" +
                      std::to_string(data.count - std::min(train_count, data.count)) + ")");
  }
  rethrow_as_config("model", [&] { model.config.validate(); });
  if (model.config.input_side != data.scene.side) {
    throw ConfigError("model input side does not match data.side");
  }
  if (estimators.empty()) throw ConfigError("estimators.list is empty");
  if (std::find(estimators.begin(), estimators.end(), EstimatorKind::kRandom) ==
      estimators.end()) {
    estimators.push_back(EstimatorKind::kRandom);
  }
  for (EstimatorKind kind : estimators) {
    rethrow_as_config(estimator_id(kind), [&] { params_for(kind).validate(); });
  }
  if (variants.empty()) throw ConfigError("variants is empty");
  if (!(metrics.fraction_step > 0.0 && metrics.fraction_step <= 1.0)) {
    throw ConfigError("metrics.fraction_step must lie in (0, 1]");
  }
  metrics.fraction_grid();
  if (metrics.roc_thresholds < 2) throw ConfigError("metrics.roc_thresholds must be >= 2");
  if (metrics.dsc_percents.empty()) throw ConfigError("metrics.dsc_percents is empty");
  for (std::size_t j = 0; j < metrics.dsc_percents.size(); ++j) {
    const double p = metrics.dsc_percents[j];
    if (!(p > 0.0 && p <= 100.0)) throw ConfigError("metrics.dsc_percents must lie in (0, 100]");
    if (j > 0 && !(p > metrics.dsc_percents[j - 1])) {
      throw ConfigError("metrics.dsc_percents must be strictly increasing");
    }
  }
  rethrow_as_config("segmentation", [&] { metrics.segmentation.validate(); });
  if (metrics.region_pooling != "mean") {
    throw ConfigError("metrics.region_pooling: only 'mean' is implemented, got '" +
                      metrics.region_pooling + "'");
  }
  if (jobs == 0) throw ConfigError("run.jobs must be >= 1");
}

std::string RunConfig::dump() const {
  std::string out;
  for (const Field& f : registry()) {
    const std::string value = f.get(*this);
    out += f.key + (value.empty() ? " =" : " = ") + value + "\n";
  }
  return out;
}

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

void RunConfig::set(const std::string& key, const std::string& value) {
  field(key).set(*this, value);
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const Field& f : registry()) out.push_back(f.key);
  return out;
}

std::string RunConfig::hash(const std::vector<std::string>& hash_keys,
                            const std::string& upstream) const {
  std::string canonical = upstream + "\n";
  for (const std::string& key : hash_keys) canonical += key + "=" + get(key) + "\n";
  return hash_hex(fnv1a64(canonical));
}

std::string RunConfig::content_hash() const {
  std::vector<std::string> hash_keys;
  for (const std::string& key : keys()) {
    if (key != "run.out" && key != "run.jobs") hash_keys.push_back(key);
  }
  return hash(hash_keys);
}

RunConfig parse_run_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    try {
      base.set(key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.what());
  }
  try {
    return parse_run_config(text, std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string hash_hex(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

}  // namespace attrib
