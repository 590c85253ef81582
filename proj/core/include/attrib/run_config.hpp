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

// Run configuration: flat "section.key = value" text with one registered
// field per key, so parsing, printing and hashing share a single table.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "attrib/estimators.hpp"
#include "attrib/metrics.hpp"
#include "attrib/model.hpp"
#include "attrib/segmentation.hpp"
#include "attrib/synth_data.hpp"

namespace attrib {

enum class Variant : std::uint8_t { kOriginal, kAbsolute };

std::string variant_name(Variant variant);  // "original" / "absolute"
Variant parse_variant(const std::string& name);  // throws ConfigError
PostprocessOps variant_ops(Variant variant);

struct DataSettings {
  SceneParams scene;
  std::size_t count = 2500;
  double balance = 0.5;
  SplitSpec split;
  // Existing manifest.csv; when set, data generation is skipped.
  std::string manifest;
};

struct ModelSettings {
  ModelConfig config;
  // Existing ATTRIBMDL file; when set, training is skipped.
  std::string path;
};

struct MetricSettings {
  double fraction_step = 0.025;
  std::size_t roc_thresholds = 101;
  RocNormalization roc_normalization = RocNormalization::kMinMax;
  std::vector<double> dsc_percents = default_percent_grid();
  FelzParams segmentation;
  // Statistic pooling heatmap scores per region. Only "mean" exists.
  std::string region_pooling = "mean";

  std::vector<double> fraction_grid() const;
};

struct RunConfig {
  DataSettings data;
  ModelSettings model;
  std::vector<EstimatorKind> estimators{all_estimators().begin(), all_estimators().end()};
  // Keyed by estimator; only the fields that estimator reads are meaningful.
  std::map<EstimatorKind, EstimatorParams> estimator_params = default_estimator_params();
  std::vector<Variant> variants{Variant::kOriginal, Variant::kAbsolute};
  MetricSettings metrics;
  std::uint64_t seed = 0;
  std::filesystem::path out = "runs/default";
  std::size_t jobs = 1;

  static std::map<EstimatorKind, EstimatorParams> default_estimator_params();

  // Parameters for `kind` with the stage seed and reference policy filled in.
  EstimatorParams params_for(EstimatorKind kind) const;

  // Throws ConfigError on any invalid or inconsistent setting. Also appends
  // the random baseline to the estimator list when it is missing.
  void validate();

  // Canonical "key = value" listing of every field, in registry order.
  std::string dump() const;
  std::string get(const std::string& key) const;
  // Throws ConfigError for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  static std::vector<std::string> keys();

  // Hash of the listed keys' canonical values, chained onto `upstream`.
  std::string hash(const std::vector<std::string>& keys, const std::string& upstream = {}) const;
  // Hash of everything that influences outputs (excludes run.out, run.jobs).
  std::string content_hash() const;
};

// Parses flat config text: blank lines and '#' comments are ignored, every
// other line is "key = value". Keys not present keep their defaults. Throws
// ConfigError with the line number on malformed input.
RunConfig parse_run_config(const std::string& text, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});

// 16 hex digits.
std::string hash_hex(std::uint64_t value);

}  // namespace attrib
