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

// End-to-end orchestration: data -> train -> attribute -> evaluate -> report.
//
// Every stage writes into a fixed run-directory layout (see run_layout.hpp)
// and stamps its outputs with a hash of the configuration subset they depend
// on. A stage whose stamps match is skipped, so changing, say, a SmoothGrad
// parameter recomputes only that estimator's heatmaps and curves.

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attrib/model.hpp"
#include "attrib/run_config.hpp"
#include "attrib/run_layout.hpp"
#include "attrib/synth_data.hpp"

namespace attrib {

std::string tool_version();

enum class Stage : std::uint8_t {
  kGenData,
  kTrain,
  kAttribute,
  kEvalFidelity,
  kEvalRoc,
  kEvalDsc,
  kReport,
};

// "gen-data", "train", "attribute", "eval-fidelity", "eval-roc", "eval-dsc",
// "report".
std::string stage_name(Stage stage);
std::vector<Stage> all_stages();

struct StageRecord {
  std::string name;
  std::string hash;
  // Number of outputs recomputed and reused from a previous run.
  std::size_t computed = 0;
  std::size_t cached = 0;
  double seconds = 0.0;
};

struct RunManifest {
  std::string tool_version;
  std::string config_hash;
  bool complete = false;
  std::string failed_stage;
  std::string error;
  std::string started_at;
  std::string finished_at;
  std::vector<StageRecord> stages;
  // Category -> paths relative to the run directory.
  std::map<std::string, std::vector<std::string>> artifacts;
  // Free-form facts about the run (accuracy, metric conventions, ...).
  std::map<std::string, std::string> metadata;

  std::string to_json() const;
  // Throws DecodeError(kMalformed) on invalid input.
  static RunManifest from_json(const std::string& text);
};

using LogFn = std::function<void(const std::string&)>;

class Pipeline {
 public:
  // Validates the config (throws ConfigError) before touching the disk.
  explicit Pipeline(RunConfig config, LogFn log = {});

  const RunConfig& config() const { return config_; }
  const RunLayout& layout() const { return layout_; }
  const RunManifest& manifest() const { return manifest_; }

  // Runs the stages in order and writes manifest.json after each one. On
  // failure the manifest is saved with complete = false and the failing
  // stage, then StageError is thrown.
  RunManifest execute(std::span<const Stage> stages);
  RunManifest run() { return execute(all_stages()); }

 private:
  StageRecord generate_data();
  StageRecord train_model();
  StageRecord attribute();
  StageRecord evaluate(Metric metric);
  StageRecord emit();

  const Dataset& dataset();
  const TrainedModel& model();
  std::string data_hash();
  std::string model_hash();
  std::string heatmap_hash(EstimatorKind kind, Variant variant);
  std::string curve_hash(Metric metric, EstimatorKind kind, Variant variant);
  void add_artifact(const std::string& category, const std::filesystem::path& path);
  void save_manifest();
  void log(const std::string& message) const;

  RunConfig config_;
  RunLayout layout_;
  LogFn log_;
  RunManifest manifest_;
  std::optional<Dataset> dataset_;
  std::optional<TrainedModel> model_;
  std::optional<std::string> data_hash_;
  std::optional<std::string> model_hash_;
};

// Convenience wrapper: Pipeline(config, log).run().
RunManifest run_pipeline(const RunConfig& config, LogFn log = {});

}  // namespace attrib
