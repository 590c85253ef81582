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

// Stable paths inside a run directory:
//
//   data/manifest.csv, data/images/, data/masks/
//   model/classifier.attribmdl, model/training.json
//   heatmaps/<estimator>/<variant>/<sample id>.hmp
//   curves/<metric>_<estimator>_<variant>.csv
//   report/
//   manifest.json

#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>

#include "attrib/estimators.hpp"
#include "attrib/run_config.hpp"

namespace attrib {

enum class Metric : std::uint8_t { kFidelity, kRoc, kDsc };

std::string metric_name(Metric metric);  // "fidelity", "roc", "dsc"
Metric parse_metric(const std::string& name);  // throws ConfigError

class RunLayout {
 public:
  explicit RunLayout(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path data_dir() const { return root_ / "data"; }
  std::filesystem::path dataset_manifest() const { return data_dir() / "manifest.csv"; }
  std::filesystem::path model_dir() const { return root_ / "model"; }
  std::filesystem::path model_file() const { return model_dir() / "classifier.attribmdl"; }
  std::filesystem::path training_log() const { return model_dir() / "training.json"; }
  std::filesystem::path heatmap_dir(EstimatorKind kind, Variant variant) const {
    return root_ / "heatmaps" / estimator_id(kind) / variant_name(variant);
  }
  std::filesystem::path heatmap_file(EstimatorKind kind, Variant variant,
                                     std::size_t sample_id) const {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.hmp", sample_id);
    return heatmap_dir(kind, variant) / name;
  }
  std::filesystem::path curves_dir() const { return root_ / "curves"; }
  std::filesystem::path curve_file(Metric metric, EstimatorKind kind, Variant variant) const {
    return curves_dir() /
           (metric_name(metric) + "_" + estimator_id(kind) + "_" + variant_name(variant) + ".csv");
  }
  std::filesystem::path report_dir() const { return root_ / "report"; }
  std::filesystem::path run_manifest() const { return root_ / "manifest.json"; }

  std::string relative(const std::filesystem::path& path) const {
    return path.lexically_relative(root_).generic_string();
  }

 private:
  std::filesystem::path root_;
};

}  // namespace attrib
