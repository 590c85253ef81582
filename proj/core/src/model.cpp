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

#include "attrib/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "attrib/error.hpp"
#include "attrib/rng.hpp"

namespace attrib {
namespace {

void check_image(const TrainedModel& model, const Image& image) {
  if (image.rows() != model.input_side() || image.cols() != model.input_side()) {
    throw ContractError("image is " + std::to_string(image.rows()) + "x" +
                        std::to_string(image.cols()) + ", model expects " +
                        std::to_string(model.input_side()) + "x" +
                        std::to_string(model.input_side()));
  }
}

// Numerically stable binary cross-entropy on a logit.
double bce_from_logit(double z, int label) {
  return std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::vector<LayerSpec> default_layer_stack() {
  return {LayerSpec::conv2d(8, 3), LayerSpec::relu(),      LayerSpec::maxpool2d(),
          LayerSpec::conv2d(16, 3), LayerSpec::relu(),     LayerSpec::maxpool2d(),
          LayerSpec::dense(32),     LayerSpec::relu(),     LayerSpec::dense(1),
          LayerSpec::sigmoid()};
}

void ModelConfig::validate() const {
  if (input_side == 0) throw ConfigError("model input side must be positive");
  if (layers.size() < 2 || layers.back().kind != LayerKind::kSigmoid ||
      layers[layers.size() - 2].kind != LayerKind::kDense ||
      layers[layers.size() - 2].out_features != 1) {
    throw ConfigError("layer stack must end with dense:1,sigmoid");
  }
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  // Also checks that the shapes chain.
  Network probe({1, input_side, input_side}, layers);
}

TrainedModel::TrainedModel(ModelConfig config, Network network, TrainingMetadata metadata)
    : config_(std::move(config)), network_(std::move(network)), metadata_(metadata) {
  config_.validate();
  if (network_.input_shape() != Shape{1, config_.input_side, config_.input_side} ||
      network_.specs() != config_.layers) {
    throw ConfigError("network does not match model config");
  }
}

TrainedModel TrainedModel::from_network(Network network) {
  const Shape& in = network.input_shape();
  if (in.size() != 3 || in[0] != 1 || in[1] != in[2]) {
    throw ConfigError("model input must be {1, side, side}");
  }
  ModelConfig config;
  config.input_side = in[1];
  config.layers = network.specs();
  return TrainedModel(std::move(config), std::move(network));
}

std::span<const Layer> TrainedModel::logit_layers() const {
  const auto all = network_.layers();
  return all.first(all.size() - 1);
}

double predict_logit(const TrainedModel& model, const Image& image) {
  check_image(model, image);
  return infer(model.logit_layers(), image.to_tensor())[0];
}

double predict_prob(const TrainedModel& model, const Image& image) {
  return sigmoid(predict_logit(model, image));
}

int predict_class(const TrainedModel& model, const Image& image) {
  return predict_prob(model, image) > 0.5 ? 1 : 0;
}

ClassScore class_score(const TrainedModel& model, const Image& image, int cls) {
  if (cls != 0 && cls != 1) throw ContractError("class must be 0 or 1");
  check_image(model, image);
  ForwardResult fwd = forward(model.logit_layers(), image.to_tensor());
  ClassScore score;
  score.seed = cls == 1 ? 1.0 : -1.0;
  score.value = score.seed * fwd.output[0];
  score.tape = std::move(fwd.tape);
  return score;
}

Image class_score_gradient(const TrainedModel& model, const Image& image, int cls,
                           BackwardMode mode) {
  const ClassScore score = class_score(model, image, cls);
  const Tensor grad = backward(score.tape, Tensor({1}, score.seed), mode);
  return Image::from_tensor(grad);
}

double balanced_accuracy(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) {
    throw ContractError("label and prediction counts differ");
  }
  std::size_t total[2] = {0, 0};
  std::size_t correct[2] = {0, 0};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i] == 1 ? 1 : 0;
    ++total[y];
    if (predictions[i] == y) ++correct[y];
  }
  double sum = 0.0;
  int classes = 0;
  for (int c = 0; c < 2; ++c) {
    if (total[c] == 0) continue;
    sum += static_cast<double>(correct[c]) / static_cast<double>(total[c]);
    ++classes;
  }
  return classes == 0 ? 0.0 : sum / classes;
}

double evaluate_balanced_accuracy(const TrainedModel& model,
                                  std::span<const LabeledSample* const> samples) {
  std::vector<int> labels;
  std::vector<int> predictions;
  for (const LabeledSample* s : samples) {
    labels.push_back(s->label);
    predictions.push_back(predict_class(model, s->image));
  }
  return balanced_accuracy(labels, predictions);
}

TrainedModel train(const Dataset& dataset, const ModelConfig& config,
                   const EpochCallback& on_epoch) {
  config.validate();
  const auto train_set = dataset.select(Split::kTrain);
  const ClassCounts counts = dataset.counts(Split::kTrain);
  if (counts.negatives == 0 || counts.positives == 0) {
    throw ValidationError("training split must contain both classes");
  }
  for (const LabeledSample* s : train_set) {
    if (s->image.rows() != config.input_side || s->image.cols() != config.input_side) {
      throw ValidationError("sample " + std::to_string(s->id) +
                            " does not match the model input size");
    }
  }

  Network network({1, config.input_side, config.input_side}, config.layers);
  network.initialize(derive_seed(config.seed, "init"));
  const std::size_t n_layers = network.layers().size() - 1;  // logit layers

  std::vector<Tensor> velocity_w(n_layers);
  std::vector<Tensor> velocity_b(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    const Layer& layer = network.layers()[l];
    if (!layer.has_parameters()) continue;
    velocity_w[l] = Tensor(layer.weights.shape());
    velocity_b[l] = Tensor(layer.bias.shape());
  }

  std::vector<std::size_t> order(train_set.size());
  const std::uint64_t shuffle_seed = derive_seed(config.seed, "shuffle");
  double epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    StreamRng rng(shuffle_seed, epoch);
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const auto logit_layers = network.layers().first(n_layers);
      ParameterGradients grads;
      for (std::size_t j = start; j < end; ++j) {
        const LabeledSample& s = *train_set[order[j]];
        const ForwardResult fwd = forward(logit_layers, s.image.to_tensor());
        const double z = fwd.output[0];
        loss_sum += bce_from_logit(z, s.label);
        backward_with_parameters(fwd.tape, Tensor({1}, sigmoid(z) - s.label), grads);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      auto layers = network.mutable_layers();
      for (std::size_t l = 0; l < n_layers; ++l) {
        if (!layers[l].has_parameters()) continue;
        auto update = [&](Tensor& param, Tensor& velocity, const Tensor& grad) {
          for (std::size_t i = 0; i < param.size(); ++i) {
            velocity[i] = config.momentum * velocity[i] - config.learning_rate * scale * grad[i];
            param[i] += velocity[i];
          }
        };
        update(layers[l].weights, velocity_w[l], grads.weights[l]);
        update(layers[l].bias, velocity_b[l], grads.bias[l]);
      }
    }
    epoch_loss = loss_sum / static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) {
      throw TrainingError("loss diverged in epoch " + std::to_string(epoch));
    }
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }

  TrainedModel model(config, std::move(network));
  TrainingMetadata meta;
  meta.seed = config.seed;
  meta.epochs_run = config.epochs;
  meta.final_loss = epoch_loss;
  meta.train_balanced_accuracy = evaluate_balanced_accuracy(model, train_set);
  meta.test_balanced_accuracy = evaluate_balanced_accuracy(model, dataset.held_out());
  model.set_metadata(meta);
  return model;
}

}  // namespace attrib
