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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "attrib/image.hpp"
#include "attrib/network.hpp"
#include "attrib/synth_data.hpp"

namespace attrib {

std::vector<LayerSpec> default_layer_stack();

struct ModelConfig {
  std::size_t input_side = 64;
  std::vector<LayerSpec> layers = default_layer_stack();
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t epochs = 6;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  // The stack must end in dense width 1 followed by sigmoid. Throws
  // ConfigError otherwise or for non-positive hyperparameters.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct TrainingMetadata {
  double train_balanced_accuracy = 0.0;
  double test_balanced_accuracy = 0.0;
  std::uint64_t seed = 0;
  std::size_t epochs_run = 0;
  double final_loss = 0.0;

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

// Binary classifier with a single sigmoid output neuron; the logit codes
// contrast (class 1) versus no contrast (class 0).
class TrainedModel {
 public:
  TrainedModel() = default;
  TrainedModel(ModelConfig config, Network network, TrainingMetadata metadata = {});

  // Wraps an arbitrary network whose input is {1, side, side} and whose last
  // two layers are dense:1 and sigmoid.
  static TrainedModel from_network(Network network);

  const ModelConfig& config() const { return config_; }
  const Network& network() const { return network_; }
  Network& mutable_network() { return network_; }
  const TrainingMetadata& metadata() const { return metadata_; }
  void set_metadata(const TrainingMetadata& m) { metadata_ = m; }

  // All layers except the trailing sigmoid: their output is the logit.
  std::span<const Layer> logit_layers() const;
  std::size_t input_side() const { return config_.input_side; }

  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;

 private:
  ModelConfig config_;
  Network network_;
  TrainingMetadata metadata_;
};

// Pre-sigmoid output. Throws ContractError on an image of the wrong size.
double predict_logit(const TrainedModel& model, const Image& image);
double predict_prob(const TrainedModel& model, const Image& image);
// 1 iff the predicted probability exceeds 0.5.
int predict_class(const TrainedModel& model, const Image& image);

// S_1 = logit, S_0 = -logit. The tape ends at the logit; differentiate it with
// `seed` (+1 for class 1, -1 for class 0) to get dS_c/dx.
struct ClassScore {
  double value = 0.0;
  double seed = 1.0;
  Tape tape;
};

ClassScore class_score(const TrainedModel& model, const Image& image, int cls);

// dS_c/dx as an image, via backward(mode) on the logit tape.
Image class_score_gradient(const TrainedModel& model, const Image& image, int cls,
                           BackwardMode mode = BackwardMode::kStandard);

// Mean of the per-class accuracies over the classes present in `labels`.
double balanced_accuracy(std::span<const int> labels, std::span<const int> predictions);
double evaluate_balanced_accuracy(const TrainedModel& model,
                                  std::span<const LabeledSample* const> samples);

// Called after each epoch with (epoch index, mean training loss).
using EpochCallback = std::function<void(std::size_t, double)>;

// Mini-batch SGD with momentum on binary cross-entropy. Deterministic given
// config.seed. Throws ValidationError when the training split lacks a class
// or images have the wrong size, TrainingError when the loss diverges.
TrainedModel train(const Dataset& dataset, const ModelConfig& config,
                   const EpochCallback& on_epoch = {});

// "ATTRIBMDL" file: magic, u32 version, config, metadata, then per
// parameterized layer the little-endian f64 weight and bias blobs.
void save_model(const TrainedModel& model, const std::filesystem::path& path);
// Throws DecodeError: kBadMagic, kBadVersion, kTruncated, kMalformed.
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace attrib
