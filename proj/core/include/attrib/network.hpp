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

// Tape-based reverse-mode differentiation for a small fixed layer set.
//
// A forward pass records, per layer, its input, its output and (for max
// pooling) the flat input index that won each window. backward() replays the
// tape in reverse with one of two rule sets:
//
//   kStandard   the ordinary chain rule.
//   kDeconvnet  relu backward applies relu to the incoming signal instead of
//               gating it by the forward sign. Every other layer, including
//               max-pool unpooling through the recorded switches, is shared.
//
// conv2d is stride 1 with zero "same" padding, so spatial size is preserved
// and its backward pass is the transposed convolution in both modes.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attrib/tensor.hpp"

namespace attrib {

enum class LayerKind : std::uint8_t {
  kConv2d = 0,
  kRelu = 1,
  kMaxPool2d = 2,
  kDense = 3,
  kSigmoid = 4,
};

std::string layer_kind_name(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::size_t out_channels = 0;  // conv2d
  std::size_t kernel = 0;        // conv2d, odd square side
  std::size_t out_features = 0;  // dense

  static LayerSpec conv2d(std::size_t out_channels, std::size_t kernel);
  static LayerSpec relu();
  static LayerSpec maxpool2d();
  static LayerSpec dense(std::size_t out_features);
  static LayerSpec sigmoid();

  // "conv2d:8:3", "relu", "maxpool", "dense:32", "sigmoid".
  std::string to_string() const;
  static LayerSpec parse(const std::string& text);

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

std::string layer_stack_to_string(std::span<const LayerSpec> specs);
std::vector<LayerSpec> parse_layer_stack(const std::string& text);

struct Layer {
  LayerSpec spec;
  Shape input_shape;
  Shape output_shape;
  // conv2d: {out, in, k, k}; dense: {out, in}. Empty for parameter-free layers.
  Tensor weights;
  Tensor bias;

  bool has_parameters() const { return !weights.empty(); }
};

class Network {
 public:
  Network() = default;
  // Validates that the stack chains from `input_shape`; throws ConfigError
  // naming the first offending layer index. Parameters start at zero.
  Network(Shape input_shape, std::vector<LayerSpec> specs);

  // He-normal weights, zero biases, deterministic in `seed`.
  void initialize(std::uint64_t seed);

  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const;
  std::span<const Layer> layers() const { return layers_; }
  std::span<Layer> mutable_layers() { return layers_; }
  std::vector<LayerSpec> specs() const;
  std::size_t parameter_count() const;

  friend bool operator==(const Network&, const Network&);

 private:
  Shape input_shape_;
  std::vector<Layer> layers_;
};

enum class BackwardMode { kStandard, kDeconvnet };

struct TapeEntry {
  std::size_t layer_index = 0;
  Tensor input;
  Tensor output;
  // maxpool2d only: for each output element, the flat index into `input` of
  // the window maximum (first occurrence in row-major window order).
  std::vector<std::uint32_t> switches;
};

// Recorded forward pass. Refers to the layers it was produced from, which must
// outlive the tape and stay unmodified.
class Tape {
 public:
  Tape() = default;
  Tape(std::span<const Layer> layers, std::vector<TapeEntry> entries)
      : layers_(layers), entries_(std::move(entries)) {}

  std::span<const Layer> layers() const { return layers_; }
  std::span<const TapeEntry> entries() const { return entries_; }
  const Tensor& input() const { return entries_.front().input; }
  const Tensor& output() const { return entries_.back().output; }

 private:
  std::span<const Layer> layers_;
  std::vector<TapeEntry> entries_;
};

struct ForwardResult {
  Tensor output;
  Tape tape;
};

// Runs `layers` on `input`. Throws ConfigError when the input shape does not
// match the first layer; the layer index is part of the message.
ForwardResult forward(std::span<const Layer> layers, const Tensor& input);
ForwardResult forward(const Network& network, const Tensor& input);

// Tape-free forward pass for inference loops.
Tensor infer(std::span<const Layer> layers, const Tensor& input);

// Per-layer parameter gradients, indexed like the layer list. Entries for
// parameter-free layers stay empty.
struct ParameterGradients {
  std::vector<Tensor> weights;
  std::vector<Tensor> bias;
};

// Gradient of dot(seed, output) with respect to the tape input. Throws
// ContractError when seed.shape() != tape.output().shape().
Tensor backward(const Tape& tape, const Tensor& seed, BackwardMode mode);

// Standard mode backward that also accumulates parameter gradients into
// `param_grads` (resized on first use).
Tensor backward_with_parameters(const Tape& tape, const Tensor& seed,
                                ParameterGradients& param_grads);

// Central differences of dot(seed, infer(layers, x)) per input element.
// Test oracle for backward(kStandard). Throws ParameterError if step <= 0.
Tensor finite_difference_gradient(std::span<const Layer> layers,
                                  const Tensor& input, const Tensor& seed,
                                  double step);

}  // namespace attrib
