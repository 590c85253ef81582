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

#include "attrib/pipeline.hpp"

#include <chrono>
#include <ctime>

#include "attrib/binary_io.hpp"
#include "attrib/error.hpp"
#include "attrib/estimators.hpp"
#include "attrib/heatmap_io.hpp"
#include "attrib/metrics.hpp"
#include "attrib/parallel.hpp"
#include "attrib/report.hpp"
#include "attrib/rng.hpp"
#include "attrib/segmentation.hpp"
#include "json.hpp"

#ifndef ATTRIB_VERSION
#define ATTRIB_VERSION "0.0.0"
#endif

namespace attrib {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_stamp(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return {};
  try {
    return read_file(path);
  } catch (const Error&) {
    return {};
  }
}

std::filesystem::path stamp_for_dir(const std::filesystem::path& dir) { return dir / "stage.hash"; }

std::filesystem::path stamp_for_file(const std::filesystem::path& file) {
  return std::filesystem::path(file.string() + ".hash");
}

std::vector<std::string> keys_with_prefix(const std::string& prefix,
                                          const std::vector<std::string>& exclude = {}) {
  std::vector<std::string> out;
  for (const std::string& key : RunConfig::keys()) {
    if (key.rfind(prefix, 0) != 0) continue;
    if (std::find(exclude.begin(), exclude.end(), key) != exclude.end()) continue;
    out.push_back(key);
  }
  return out;
}

std::string file_hash(const std::filesystem::path& path) {
  return hash_hex(fnv1a64(read_file(path)));
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string tool_version() { return ATTRIB_VERSION; }

std::string stage_name(Stage stage) {
  switch (stage) {
    case Stage::kGenData: return "gen-data";
    case Stage::kTrain: return "train";
    case Stage::kAttribute: return "attribute";
    case Stage::kEvalFidelity: return "eval-fidelity";
    case Stage::kEvalRoc: return "eval-roc";
    case Stage::kEvalDsc: return "eval-dsc";
    case Stage::kReport: return "report";
  }
  return "unknown";
}

std::vector<Stage> all_stages() {
  return {Stage::kGenData,      Stage::kTrain,   Stage::kAttribute, Stage::kEvalFidelity,
          Stage::kEvalRoc,      Stage::kEvalDsc, Stage::kReport};
}

std::string RunManifest::to_json() const {
  json j;
  j["tool_version"] = tool_version;
  j["config_hash"] = config_hash;
  j["complete"] = complete;
  j["failed_stage"] = failed_stage;
  j["error"] = error;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["stages"] = json::array();
  for (const StageRecord& s : stages) {
    j["stages"].push_back({{"name", s.name},
                           {"hash", s.hash},
                           {"computed", s.computed},
                           {"cached", s.cached},
                           {"seconds", s.seconds}});
  }
  j["artifacts"] = artifacts;
  j["metadata"] = metadata;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.complete = j.at("complete").get<bool>();
    m.failed_stage = j.at("failed_stage").get<std::string>();
    m.error = j.at("error").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    for (const json& s : j.at("stages")) {
      m.stages.push_back({s.at("name").get<std::string>(), s.at("hash").get<std::string>(),
                          s.at("computed").get<std::size_t>(), s.at("cached").get<std::size_t>(),
                          s.at("seconds").get<double>()});
    }
    m.artifacts = j.at("artifacts").get<std::map<std::string, std::vector<std::string>>>();
    m.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw DecodeError(DecodeError::Kind::kMalformed, std::string("run manifest: ") + e.what());
  }
}

Pipeline::Pipeline(RunConfig config, LogFn log)
    : config_(std::move(config)), layout_(config_.out), log_(std::move(log)) {
  config_.validate();
}

void Pipeline::log(const std::string& message) const {
  if (log_) log_(message);
}

void Pipeline::add_artifact(const std::string& category, const std::filesystem::path& path) {
  const std::string inside = layout_.relative(path);
  const std::string rel =
      inside.empty() || inside.rfind("..", 0) == 0 ? path.generic_string() : inside;
  auto& list = manifest_.artifacts[category];
  if (std::find(list.begin(), list.end(), rel) == list.end()) list.push_back(rel);
}

void Pipeline::save_manifest() { write_file(layout_.run_manifest(), manifest_.to_json()); }

const Dataset& Pipeline::dataset() {
  if (!dataset_) {
    const std::filesystem::path manifest = config_.data.manifest.empty()
                                               ? layout_.dataset_manifest()
                                               : std::filesystem::path(config_.data.manifest);
    if (!std::filesystem::exists(manifest)) {
      throw Error("dataset manifest " + manifest.string() + " not found; run gen-data first");
    }
    dataset_ = read_dataset(manifest);
    if (dataset_->select(Split::kEval).empty()) {
      throw ValidationError("dataset has no eval samples");
    }
  }
  return *dataset_;
}

const TrainedModel& Pipeline::model() {
  if (!model_) {
    const std::filesystem::path path =
        config_.model.path.empty() ? layout_.model_file() : std::filesystem::path(config_.model.path);
    if (!std::filesystem::exists(path)) {
      throw Error("model file " + path.string() + " not found; run train first");
    }
    model_ = load_model(path);
  }
  return *model_;
}

std::string Pipeline::data_hash() {
  if (!data_hash_) {
    if (!config_.data.manifest.empty()) {
      data_hash_ = file_hash(config_.data.manifest);
    } else {
      auto keys = keys_with_prefix("data.", {"data.manifest"});
      keys.push_back("run.seed");
      data_hash_ = config_.hash(keys, "data");
    }
  }
  return *data_hash_;
}

std::string Pipeline::model_hash() {
  if (!model_hash_) {
    model_hash_ = config_.model.path.empty()
                      ? config_.hash(keys_with_prefix("model.", {"model.path"}), data_hash())
                      : file_hash(config_.model.path);
  }
  return *model_hash_;
}

std::string Pipeline::heatmap_hash(EstimatorKind kind, Variant variant) {
  auto keys = keys_with_prefix(estimator_id(kind) + ".");
  keys.push_back("run.seed");
  return config_.hash(keys, model_hash() + "|" + data_hash() + "|" + estimator_id(kind) + "|" +
                                variant_name(variant));
}

std::string Pipeline::curve_hash(Metric metric, EstimatorKind kind, Variant variant) {
  std::vector<std::string> keys;
  switch (metric) {
    case Metric::kFidelity:
      keys = {"metrics.fraction_step"};
      break;
    case Metric::kRoc:
      keys = {"metrics.roc_thresholds", "metrics.roc_normalization"};
      break;
    case Metric::kDsc:
      keys = keys_with_prefix("segmentation.");
      keys.push_back("metrics.dsc_percents");
      keys.push_back("metrics.region_pooling");
      break;
  }
  return config_.hash(keys, heatmap_hash(kind, variant) + "|" + metric_name(metric));
}

RunManifest Pipeline::execute(std::span<const Stage> stages) {
  manifest_ = RunManifest{};
  manifest_.tool_version = tool_version();
  manifest_.config_hash = config_.content_hash();
  manifest_.started_at = utc_now();
  auto& meta = manifest_.metadata;
  meta["attribution.target"] = "output neuron logit (class 1 score)";
  meta["postprocess.sign_inversion"] =
      "IntGrad, IntGradBW and ExpectedGrad maps negated when the predicted class is 0";
  meta["roc.normalization"] = config_.metrics.roc_normalization == RocNormalization::kMinMax
                                  ? "per-image min-max"
                                  : "per-image rank";
  meta["roc.positive"] = "normalized score strictly above threshold";
  meta["dsc.region_inclusion"] = "atomic: the region crossing the p% budget is included whole";
  meta["fidelity.integration"] = "trapezoidal over the full fraction grid including 0";
  meta["smoothgrad.sigma"] = config_.get("smoothgrad.sigma");
  meta["smoothgrad_sq.sigma"] = config_.get("smoothgrad_sq.sigma");
  meta["expected_grad.samples"] = config_.get("expected_grad.samples");
  std::filesystem::create_directories(layout_.root());
  write_file(layout_.root() / "config.txt", config_.dump());
  add_artifact("config", layout_.root() / "config.txt");
  save_manifest();

  for (Stage stage : stages) {
    const std::string name = stage_name(stage);
    const auto start = Clock::now();
    log("stage " + name);
    try {
      StageRecord record;
      switch (stage) {
        case Stage::kGenData: record = generate_data(); break;
        case Stage::kTrain: record = train_model(); break;
        case Stage::kAttribute: record = attribute(); break;
        case Stage::kEvalFidelity: record = evaluate(Metric::kFidelity); break;
        case Stage::kEvalRoc: record = evaluate(Metric::kRoc); break;
        case Stage::kEvalDsc: record = evaluate(Metric::kDsc); break;
        case Stage::kReport: record = emit(); break;
      }
      record.name = name;
      record.seconds = seconds_since(start);
      manifest_.stages.push_back(record);
      save_manifest();
      log("stage " + name + " done in " + fmt3(record.seconds) + " s (" +
          std::to_string(record.computed) + " computed, " + std::to_string(record.cached) +
          " cached)");
    } catch (const std::exception& e) {
      manifest_.complete = false;
      manifest_.failed_stage = name;
      manifest_.error = e.what();
      manifest_.finished_at = utc_now();
      try {
        save_manifest();
      } catch (const std::exception&) {
        // The original failure matters more than a manifest write error.
      }
      throw StageError(name, e.what());
    }
  }
  manifest_.complete = true;
  manifest_.finished_at = utc_now();
  save_manifest();
  return manifest_;
}

StageRecord Pipeline::generate_data() {
  StageRecord record;
  record.hash = data_hash();
  if (!config_.data.manifest.empty()) {
    log("using existing dataset " + config_.data.manifest);
    record.cached = 1;
  } else {
    const auto stamp = stamp_for_dir(layout_.data_dir());
    if (read_stamp(stamp) == record.hash && std::filesystem::exists(layout_.dataset_manifest())) {
      record.cached = 1;
    } else {
      std::filesystem::remove_all(layout_.data_dir());
      SceneParams scene = config_.data.scene;
      scene.seed = derive_seed(config_.seed, "data");
      const Dataset generated =
          generate_dataset(scene, config_.data.count, config_.data.balance, config_.data.split);
      write_dataset(generated, layout_.data_dir());
      write_file(stamp, record.hash);
      dataset_.reset();
      record.computed = 1;
    }
    add_artifact("data", layout_.dataset_manifest());
  }
  const Dataset& ds = dataset();
  double coverage = 0.0;
  for (const LabeledSample& s : ds.samples) coverage += s.mask.coverage();
  manifest_.metadata["data.mean_mask_coverage"] =
      format_real(coverage / static_cast<double>(ds.samples.size()));
  for (Split split : {Split::kTrain, Split::kTest, Split::kEval}) {
    const ClassCounts counts = ds.counts(split);
    manifest_.metadata["data." + split_name(split) + ".counts"] =
        std::to_string(counts.negatives) + " negative, " + std::to_string(counts.positives) +
        " positive";
  }
  return record;
}

StageRecord Pipeline::train_model() {
  StageRecord record;
  record.hash = model_hash();
  if (!config_.model.path.empty()) {
    log("using existing model " + config_.model.path);
    record.cached = 1;
  } else {
    const auto stamp = stamp_for_dir(layout_.model_dir());
    if (read_stamp(stamp) == record.hash && std::filesystem::exists(layout_.model_file())) {
      record.cached = 1;
    } else {
      std::filesystem::remove(stamp);
      ModelConfig cfg = config_.model.config;
      cfg.seed = derive_seed(config_.seed, "train");
      json losses = json::array();
      TrainedModel trained = train(dataset(), cfg, [&](std::size_t epoch, double loss) {
        losses.push_back(loss);
        log("epoch " + std::to_string(epoch + 1) + "/" + std::to_string(cfg.epochs) +
            " loss " + fmt3(loss));
      });
      save_model(trained, layout_.model_file());
      const TrainingMetadata& m = trained.metadata();
      json info{{"epoch_losses", losses},
                {"train_balanced_accuracy", m.train_balanced_accuracy},
                {"test_balanced_accuracy", m.test_balanced_accuracy},
                {"epochs_run", m.epochs_run},
                {"seed", m.seed}};
      write_file(layout_.training_log(), info.dump(2) + "\n");
      write_file(stamp, record.hash);
      model_ = std::move(trained);
      record.computed = 1;
    }
    add_artifact("model", layout_.model_file());
    add_artifact("model", layout_.training_log());
  }
  const TrainedModel& m = model();
  if (m.input_side() != config_.data.scene.side) {
    throw ValidationError("model input side " + std::to_string(m.input_side()) +
                          " does not match data.side " + std::to_string(config_.data.scene.side));
  }
  manifest_.metadata["model.test_balanced_accuracy"] =
      format_real(m.metadata().test_balanced_accuracy);
  manifest_.metadata["model.train_balanced_accuracy"] =
      format_real(m.metadata().train_balanced_accuracy);
  log("model test balanced accuracy " + fmt3(m.metadata().test_balanced_accuracy));
  return record;
}

StageRecord Pipeline::attribute() {
  StageRecord record;
  record.hash = model_hash();
  const Dataset& ds = dataset();
  const TrainedModel& m = model();
  const auto eval = ds.select(Split::kEval);
  std::vector<const Image*> pool;
  for (const LabeledSample* s : ds.select(Split::kTrain)) pool.push_back(&s->image);

  for (EstimatorKind kind : config_.estimators) {
    std::vector<Variant> todo;
    for (Variant v : config_.variants) {
      const auto dir = layout_.heatmap_dir(kind, v);
      add_artifact("heatmaps", dir);
      if (read_stamp(stamp_for_dir(dir)) == heatmap_hash(kind, v)) {
        ++record.cached;
      } else {
        todo.push_back(v);
        std::filesystem::remove_all(dir);
      }
    }
    if (todo.empty()) continue;
    const auto start = Clock::now();
    const EstimatorParams params = config_.params_for(kind);
    parallel_for(eval.size(), config_.jobs, [&](std::size_t i) {
      const LabeledSample& sample = *eval[i];
      const int predicted = predict_class(m, sample.image);
      EstimatorParams p = params;
      p.seed = derive_seed(params.seed, static_cast<std::uint64_t>(sample.id));
      const Heatmap raw = compute_heatmap(kind, m, sample.image, 1, p, pool);
      for (Variant v : todo) {
        save_heatmap(postprocess(raw, variant_ops(v), predicted),
                     layout_.heatmap_file(kind, v, sample.id));
      }
    });
    for (Variant v : todo) {
      write_file(stamp_for_dir(layout_.heatmap_dir(kind, v)), heatmap_hash(kind, v));
      ++record.computed;
    }
    log(estimator_id(kind) + ": " + std::to_string(eval.size()) + " heatmaps in " +
        fmt3(seconds_since(start)) + " s");
  }
  return record;
}

StageRecord Pipeline::evaluate(Metric metric) {
  StageRecord record;
  record.hash = model_hash();
  const Dataset& ds = dataset();
  const auto eval = ds.select(Split::kEval);
  std::vector<MaskImage> masks;
  for (const LabeledSample* s : eval) masks.push_back(s->mask);
  std::vector<RegionMap> regions;

  for (EstimatorKind kind : config_.estimators) {
    for (Variant v : config_.variants) {
      const auto csv = layout_.curve_file(metric, kind, v);
      const auto stamp = stamp_for_file(csv);
      const std::string hash = curve_hash(metric, kind, v);
      add_artifact("curves", csv);
      if (read_stamp(stamp) == hash && std::filesystem::exists(csv)) {
        ++record.cached;
        continue;
      }
      std::filesystem::remove(stamp);
      std::vector<Heatmap> heatmaps(eval.size());
      parallel_for(eval.size(), config_.jobs, [&](std::size_t i) {
        heatmaps[i] = load_heatmap(layout_.heatmap_file(kind, v, eval[i]->id));
      });
      const std::string tag = estimator_id(kind) + "/" + variant_name(v);
      switch (metric) {
        case Metric::kFidelity: {
          const auto grid = config_.metrics.fraction_grid();
          const auto mif = perturbation_curve(model(), eval, heatmaps,
                                              PerturbationOrder::kMostImportantFirst, grid,
                                              config_.jobs);
          const auto lif = perturbation_curve(model(), eval, heatmaps,
                                              PerturbationOrder::kLeastImportantFirst, grid,
                                              config_.jobs);
          write_perturbation_csv(mif, lif, csv);
          log(tag + ": F = " + fmt3(fidelity(mif, lif)));
          break;
        }
        case Metric::kRoc: {
          const RocCurve roc = roc_curve_mean(heatmaps, masks, config_.metrics.roc_thresholds,
                                              config_.metrics.roc_normalization);
          if (!roc.excluded.empty()) {
            log("warning: " + std::to_string(roc.excluded.size()) +
                " image(s) with empty or full masks excluded from the ROC mean");
          }
          write_roc_csv(roc, csv);
          const AucResult a = auc(roc);
          log(tag + ": AUC = " + fmt3(a.mean_tpr) + " (trapezoidal " + fmt3(a.trapezoidal) + ")");
          break;
        }
        case Metric::kDsc: {
          if (regions.empty()) {
            regions.resize(eval.size());
            parallel_for(eval.size(), config_.jobs, [&](std::size_t i) {
              regions[i] = felzenszwalb_segment(eval[i]->image, config_.metrics.segmentation);
            });
          }
          const DscCurve curve =
              dsc_curve(heatmaps, regions, masks, config_.metrics.dsc_percents);
          write_dsc_csv(curve, csv);
          log(tag + ": max DSC = " + fmt3(curve.max_dsc) + " at " +
              format_real(curve.argmax_percent) + "%");
          break;
        }
      }
      write_file(stamp, hash);
      ++record.computed;
    }
  }
  return record;
}

StageRecord Pipeline::emit() {
  StageRecord record;
  record.hash = config_.content_hash();
  const ReportResult report = emit_report(layout_, config_.estimators, config_.variants);
  for (const auto& file : report.files) add_artifact("report", file);
  record.computed = report.files.size();
  return record;
}

RunManifest run_pipeline(const RunConfig& config, LogFn log) {
  Pipeline pipeline(config, std::move(log));
  return pipeline.run();
}

}  // namespace attrib
