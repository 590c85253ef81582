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

#include "attrib/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <cstddef>
#include <sstream>

#include "attrib/error.hpp"
#include "attrib/rng.hpp"

namespace attrib {
namespace {

using Index = std::ptrdiff_t;

std::string layer_prefix(std::size_t index, const LayerSpec& spec) {
  return "layer " + std::to_string(index) + " (" + spec.to_string() + "): ";
}

// Computes the output shape of `spec` applied to `in`, or throws ConfigError.
Shape infer_output_shape(std::size_t index, const LayerSpec& spec,
                         const Shape& in) {
  const std::string where = layer_prefix(index, spec);
  switch (spec.kind) {
    case LayerKind::kConv2d:
      if (in.size() != 3) {
        throw ConfigError(where + "expects a {channels, height, width} input, got " +
                          shape_to_string(in));
      }
      if (spec.kernel == 0 || spec.kernel % 2 == 0) {
        throw ConfigError(where + "kernel side must be odd");
      }
      if (spec.out_channels == 0) {
        throw ConfigError(where + "needs at least one output channel");
      }
      return {spec.out_channels, in[1], in[2]};
    case LayerKind::kRelu:
    case LayerKind::kSigmoid:
      return in;
    case LayerKind::kMaxPool2d:
      if (in.size() != 3) {
        throw ConfigError(where + "expects a {channels, height, width} input, got " +
                          shape_to_string(in));
      }
      if (in[1] < 2 || in[2] < 2 || in[1] % 2 != 0 || in[2] % 2 != 0) {
        throw ConfigError(where + "2x2 pooling needs even spatial sides, got " +
                          shape_to_string(in));
      }
      return {in[0], in[1] / 2, in[2] / 2};
    case LayerKind::kDense:
      if (spec.out_features == 0) {
        throw ConfigError(where + "needs at least one output feature");
      }
      return {spec.out_features};
  }
  throw ConfigError(where + "unknown layer kind");
}

void conv2d_forward(const Layer& layer, const double* in, double* out) {
  const Index channels = static_cast<Index>(layer.input_shape[0]);
  const Index height = static_cast<Index>(layer.input_shape[1]);
  const Index width = static_cast<Index>(layer.input_shape[2]);
  const Index out_channels = static_cast<Index>(layer.spec.out_channels);
  const Index k = static_cast<Index>(layer.spec.kernel);
  const Index pad = k / 2;
  const double* w = layer.weights.data();

  // Zero-padded copy so the inner loops need no bounds checks.
  const Index pw = width + 2 * pad;
  const Index ph = height + 2 * pad;
  thread_local std::vector<double> padded;
  padded.assign(static_cast<std::size_t>(channels * ph * pw), 0.0);
  for (Index c = 0; c < channels; ++c) {
    for (Index y = 0; y < height; ++y) {
      std::copy_n(in + (c * height + y) * width, width,
                  padded.data() + (c * ph + y + pad) * pw + pad);
    }
  }

  // Each strip of 8 outputs accumulates over all taps in four two-lane
  // registers.
  using Lanes = double __attribute__((vector_size(16)));
  constexpr Index kStrip = 8;
  auto load = [](const double* p) {
    Lanes v;
    std::memcpy(&v, p, sizeof(v));
    return v;
  };
  for (Index oc = 0; oc < out_channels; ++oc) {
    const double* w_oc = w + oc * channels * k * k;
    const double bias = layer.bias[oc];
    for (Index y = 0; y < height; ++y) {
      double* dst = out + (oc * height + y) * width;
      Index x = 0;
      for (; x + kStrip <= width; x += kStrip) {
        Lanes a0 = {bias, bias};
        Lanes a1 = a0;
        Lanes a2 = a0;
        Lanes a3 = a0;
        for (Index ic = 0; ic < channels; ++ic) {
          for (Index ky = 0; ky < k; ++ky) {
            const double* src = padded.data() + (ic * ph + y + ky) * pw + x;
            const double* wk = w_oc + (ic * k + ky) * k;
            for (Index kx = 0; kx < k; ++kx) {
              const Lanes weight = {wk[kx], wk[kx]};
              a0 += weight * load(src + kx);
              a1 += weight * load(src + kx + 2);
              a2 += weight * load(src + kx + 4);
              a3 += weight * load(src + kx + 6);
            }
          }
        }
        std::memcpy(dst + x, &a0, sizeof(a0));
        std::memcpy(dst + x + 2, &a1, sizeof(a1));
        std::memcpy(dst + x + 4, &a2, sizeof(a2));
        std::memcpy(dst + x + 6, &a3, sizeof(a3));
      }
      for (; x < width; ++x) {
        double acc = bias;
        for (Index ic = 0; ic < channels; ++ic) {
          for (Index ky = 0; ky < k; ++ky) {
            const double* src = padded.data() + (ic * ph + y + ky) * pw + x;
            const double* wk = w_oc + (ic * k + ky) * k;
            for (Index kx = 0; kx < k; ++kx) acc += wk[kx] * src[kx];
          }
        }
        dst[x] = acc;
      }
    }
  }
}

// Transposed convolution of `grad_out`; optionally accumulates parameter
// gradients.
void conv2d_backward(const Layer& layer, const double* in,
                     const double* grad_out, double* grad_in,
                     Tensor* weight_grad, Tensor* bias_grad) {
  const Index channels = static_cast<Index>(layer.input_shape[0]);
  const Index height = static_cast<Index>(layer.input_shape[1]);
  const Index width = static_cast<Index>(layer.input_shape[2]);
  const Index out_channels = static_cast<Index>(layer.spec.out_channels);
  const Index k = static_cast<Index>(layer.spec.kernel);
  const Index pad = k / 2;
  const Index plane = height * width;
  const double* w = layer.weights.data();

  std::fill(grad_in, grad_in + channels * plane, 0.0);
  for (Index oc = 0; oc < out_channels; ++oc) {
    const double* g_plane = grad_out + oc * plane;
    if (bias_grad != nullptr) {
      double sum = 0.0;
      for (Index i = 0; i < plane; ++i) sum += g_plane[i];
      (*bias_grad)[oc] += sum;
    }
    for (Index ic = 0; ic < channels; ++ic) {
      double* gi_plane = grad_in + ic * plane;
      const double* in_plane = in + ic * plane;
      for (Index ky = 0; ky < k; ++ky) {
        const Index dy = ky - pad;
        const Index y0 = std::max<Index>(0, -dy);
        const Index y1 = std::min(height, height - dy);
        for (Index kx = 0; kx < k; ++kx) {
          const Index dx = kx - pad;
          const Index x0 = std::max<Index>(0, -dx);
          const Index x1 = std::min(width, width - dx);
          const Index widx = ((oc * channels + ic) * k + ky) * k + kx;
          const double weight = w[widx];
          double wsum = 0.0;
          for (Index y = y0; y < y1; ++y) {
            const double* g = g_plane + y * width;
            double* dst = gi_plane + (y + dy) * width + dx;
            for (Index x = x0; x < x1; ++x) dst[x] += weight * g[x];
            if (weight_grad != nullptr) {
              const double* src = in_plane + (y + dy) * width + dx;
              for (Index x = x0; x < x1; ++x) wsum += g[x] * src[x];
            }
          }
          if (weight_grad != nullptr) (*weight_grad)[widx] += wsum;
        }
      }
    }
  }
}

void dense_forward(const Layer& layer, const double* in, double* out) {
  const std::size_t n_in = shape_size(layer.input_shape);
  const std::size_t n_out = layer.spec.out_features;
  const double* w = layer.weights.data();
  for (std::size_t o = 0; o < n_out; ++o) {
    const double* row = w + o * n_in;
    double sum = 0.0;
    for (std::size_t i = 0; i < n_in; ++i) sum += row[i] * in[i];
    out[o] = sum + layer.bias[o];
  }
}

void dense_backward(const Layer& layer, const double* in,
                    const double* grad_out, double* grad_in,
                    Tensor* weight_grad, Tensor* bias_grad) {
  const std::size_t n_in = shape_size(layer.input_shape);
  const std::size_t n_out = layer.spec.out_features;
  const double* w = layer.weights.data();
  std::fill(grad_in, grad_in + n_in, 0.0);
  for (std::size_t o = 0; o < n_out; ++o) {
    const double g = grad_out[o];
    const double* row = w + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) grad_in[i] += row[i] * g;
    if (weight_grad != nullptr) {
      double* dw = weight_grad->data() + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) dw[i] += g * in[i];
      (*bias_grad)[o] += g;
    }
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void maxpool_forward(const Layer& layer, const double* in, double* out,
                     std::vector<std::uint32_t>* switches) {
  const std::size_t channels = layer.input_shape[0];
  const std::size_t height = layer.input_shape[1];
  const std::size_t width = layer.input_shape[2];
  const std::size_t out_h = height / 2;
  const std::size_t out_w = width / 2;
  std::size_t o = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      for (std::size_t ox = 0; ox < out_w; ++ox, ++o) {
        const std::size_t base = (c * height + 2 * oy) * width + 2 * ox;
        const std::size_t window[4] = {base, base + 1, base + width,
                                       base + width + 1};
        std::size_t best = window[0];
        for (int j = 1; j < 4; ++j) {
          if (in[window[j]] > in[best]) best = window[j];
        }
        out[o] = in[best];
        if (switches != nullptr) {
          (*switches)[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
}

// Applies one layer; `switches` may be null when no tape is being recorded.
void layer_forward(const Layer& layer, const Tensor& in, Tensor& out,
                   std::vector<std::uint32_t>* switches) {
  const double* src = in.data();
  double* dst = out.data();
  const std::size_t n = out.size();
  switch (layer.spec.kind) {
    case LayerKind::kConv2d:
      conv2d_forward(layer, src, dst);
      break;
    case LayerKind::kRelu:
      for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
      break;
    case LayerKind::kSigmoid:
      for (std::size_t i = 0; i < n; ++i) dst[i] = sigmoid(src[i]);
      break;
    case LayerKind::kMaxPool2d:
      if (switches != nullptr) switches->resize(n);
      maxpool_forward(layer, src, dst, switches);
      break;
    case LayerKind::kDense:
      dense_forward(layer, src, dst);
      break;
  }
}

void check_layer_input(std::span<const Layer> layers, std::size_t index,
                       const Shape& shape) {
  if (layers[index].input_shape != shape) {
    throw ConfigError(layer_prefix(index, layers[index].spec) + "expected input " +
                      shape_to_string(layers[index].input_shape) + ", got " +
                      shape_to_string(shape));
  }
}

Tensor backward_impl(const Tape& tape, const Tensor& seed, BackwardMode mode,
                     ParameterGradients* param_grads) {
  if (tape.entries().empty()) throw ContractError("backward on an empty tape");
  if (seed.shape() != tape.output().shape()) {
    throw ContractError("backward seed shape " + shape_to_string(seed.shape()) +
                        " does not match tape output " +
                        shape_to_string(tape.output().shape()));
  }
  const auto layers = tape.layers();
  if (param_grads != nullptr && param_grads->weights.size() != layers.size()) {
    param_grads->weights.assign(layers.size(), Tensor());
    param_grads->bias.assign(layers.size(), Tensor());
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].has_parameters()) {
        param_grads->weights[i] = Tensor(layers[i].weights.shape());
        param_grads->bias[i] = Tensor(layers[i].bias.shape());
      }
    }
  }

  Tensor grad = seed;
  const auto entries = tape.entries();
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    const TapeEntry& entry = *it;
    const Layer& layer = layers[entry.layer_index];
    Tensor grad_in(entry.input.shape());
    const double* g = grad.data();
    double* gi = grad_in.data();
    const std::size_t n = grad_in.size();
    Tensor* wg = nullptr;
    Tensor* bg = nullptr;
    if (param_grads != nullptr && layer.has_parameters()) {
      wg = &param_grads->weights[entry.layer_index];
      bg = &param_grads->bias[entry.layer_index];
    }
    switch (layer.spec.kind) {
      case LayerKind::kConv2d:
        conv2d_backward(layer, entry.input.data(), g, gi, wg, bg);
        break;
      case LayerKind::kDense:
        dense_backward(layer, entry.input.data(), g, gi, wg, bg);
        break;
      case LayerKind::kRelu: {
        const double* x = entry.input.data();
        if (mode == BackwardMode::kStandard) {
          for (std::size_t i = 0; i < n; ++i) gi[i] = x[i] > 0.0 ? g[i] : 0.0;
        } else {
          for (std::size_t i = 0; i < n; ++i) gi[i] = g[i] > 0.0 ? g[i] : 0.0;
        }
        break;
      }
      case LayerKind::kSigmoid: {
        const double* s = entry.output.data();
        for (std::size_t i = 0; i < n; ++i) gi[i] = g[i] * s[i] * (1.0 - s[i]);
        break;
      }
      case LayerKind::kMaxPool2d:
        for (std::size_t o = 0; o < entry.switches.size(); ++o) {
          gi[entry.switches[o]] += g[o];
        }
        break;
    }
    grad = std::move(grad_in);
  }
  return grad;
}

}  // namespace

std::string layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kMaxPool2d: return "maxpool";
    case LayerKind::kDense: return "dense";
    case LayerKind::kSigmoid: return "sigmoid";
  }
  return "unknown";
}

LayerSpec LayerSpec::conv2d(std::size_t out_channels, std::size_t kernel) {
  return {LayerKind::kConv2d, out_channels, kernel, 0};
}
LayerSpec LayerSpec::relu() { return {LayerKind::kRelu, 0, 0, 0}; }
LayerSpec LayerSpec::maxpool2d() { return {LayerKind::kMaxPool2d, 0, 0, 0}; }
LayerSpec LayerSpec::dense(std::size_t out_features) {
  return {LayerKind::kDense, 0, 0, out_features};
}
LayerSpec LayerSpec::sigmoid() { return {LayerKind::kSigmoid, 0, 0, 0}; }

std::string LayerSpec::to_string() const {
  switch (kind) {
    case LayerKind::kConv2d:
      return "conv2d:" + std::to_string(out_channels) + ":" +
             std::to_string(kernel);
    case LayerKind::kDense:
      return "dense:" + std::to_string(out_features);
    default:
      return layer_kind_name(kind);
  }
}

LayerSpec LayerSpec::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  auto number = [&](std::size_t i) -> std::size_t {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(parts.at(i), &used);
      if (used != parts[i].size() || v <= 0) throw ConfigError("");
      return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw ConfigError("bad layer spec '" + text + "'");
    }
  };
  if (parts.empty()) throw ConfigError("empty layer spec");
  const std::string& name = parts[0];
  if (name == "conv2d" && parts.size() == 3) return conv2d(number(1), number(2));
  if (name == "dense" && parts.size() == 2) return dense(number(1));
  if (parts.size() == 1) {
    if (name == "relu") return relu();
    if (name == "maxpool" || name == "maxpool2d") return maxpool2d();
    if (name == "sigmoid") return sigmoid();
  }
  throw ConfigError("bad layer spec '" + text + "'");
}

std::string layer_stack_to_string(std::span<const LayerSpec> specs) {
  std::string out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (i > 0) out += ",";
    out += specs[i].to_string();
  }
  return out;
}

std::vector<LayerSpec> parse_layer_stack(const std::string& text) {
  std::vector<LayerSpec> specs;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) specs.push_back(LayerSpec::parse(item));
  }
  return specs;
}

Network::Network(Shape input_shape, std::vector<LayerSpec> specs)
    : input_shape_(std::move(input_shape)) {
  if (specs.empty()) throw ConfigError("network has no layers");
  if (input_shape_.empty() || shape_size(input_shape_) == 0) {
    throw ConfigError("network input shape must be non-empty");
  }
  Shape current = input_shape_;
  layers_.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    Layer layer;
    layer.spec = specs[i];
    layer.input_shape = current;
    layer.output_shape = infer_output_shape(i, specs[i], current);
    if (specs[i].kind == LayerKind::kConv2d) {
      layer.weights = Tensor(
          {specs[i].out_channels, current[0], specs[i].kernel, specs[i].kernel});
      layer.bias = Tensor({specs[i].out_channels});
    } else if (specs[i].kind == LayerKind::kDense) {
      layer.weights = Tensor({specs[i].out_features, shape_size(current)});
      layer.bias = Tensor({specs[i].out_features});
    }
    current = layer.output_shape;
    layers_.push_back(std::move(layer));
  }
}

void Network::initialize(std::uint64_t seed) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Layer& layer = layers_[l];
    if (!layer.has_parameters()) continue;
    const std::size_t fan_in = layer.weights.size() / layer.weights.shape()[0];
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    const CounterRng rng(derive_seed(seed, l));
    for (std::size_t j = 0; j < layer.weights.size(); ++j) {
      layer.weights[j] = stddev * rng.normal(0, j);
    }
    layer.bias.fill(0.0);
  }
}

const Shape& Network::output_shape() const {
  return layers_.back().output_shape;
}

std::vector<LayerSpec> Network::specs() const {
  std::vector<LayerSpec> out;
  out.reserve(layers_.size());
  for (const Layer& layer : layers_) out.push_back(layer.spec);
  return out;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& layer : layers_) n += layer.weights.size() + layer.bias.size();
  return n;
}

bool operator==(const Network& a, const Network& b) {
  if (a.input_shape_ != b.input_shape_ || a.layers_.size() != b.layers_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    const Layer& x = a.layers_[i];
    const Layer& y = b.layers_[i];
    if (!(x.spec == y.spec) || x.input_shape != y.input_shape ||
        x.output_shape != y.output_shape || !(x.weights == y.weights) ||
        !(x.bias == y.bias)) {
      return false;
    }
  }
  return true;
}

ForwardResult forward(std::span<const Layer> layers, const Tensor& input) {
  if (layers.empty()) throw ConfigError("forward on an empty layer list");
  std::vector<TapeEntry> entries;
  entries.reserve(layers.size());
  const Tensor* current = &input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    check_layer_input(layers, i, current->shape());
    TapeEntry entry;
    entry.layer_index = i;
    entry.input = *current;
    entry.output = Tensor(layers[i].output_shape);
    layer_forward(layers[i], entry.input, entry.output, &entry.switches);
    entries.push_back(std::move(entry));
    current = &entries.back().output;
  }
  Tensor output = entries.back().output;
  return {std::move(output), Tape(layers, std::move(entries))};
}

ForwardResult forward(const Network& network, const Tensor& input) {
  return forward(network.layers(), input);
}

Tensor infer(std::span<const Layer> layers, const Tensor& input) {
  if (layers.empty()) throw ConfigError("forward on an empty layer list");
  Tensor current = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    check_layer_input(layers, i, current.shape());
    Tensor next(layers[i].output_shape);
    layer_forward(layers[i], current, next, nullptr);
    current = std::move(next);
  }
  return current;
}

Tensor backward(const Tape& tape, const Tensor& seed, BackwardMode mode) {
  return backward_impl(tape, seed, mode, nullptr);
}

Tensor backward_with_parameters(const Tape& tape, const Tensor& seed,
                                ParameterGradients& param_grads) {
  return backward_impl(tape, seed, BackwardMode::kStandard, &param_grads);
}

Tensor finite_difference_gradient(std::span<const Layer> layers,
                                  const Tensor& input, const Tensor& seed,
                                  double step) {
  if (!(step > 0.0)) throw ParameterError("finite-difference step must be > 0");
  auto objective = [&](const Tensor& x) {
    const Tensor out = infer(layers, x);
    if (out.shape() != seed.shape()) {
      throw ContractError("seed shape " + shape_to_string(seed.shape()) +
                          " does not match output " +
                          shape_to_string(out.shape()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) sum += seed[i] * out[i];
    return sum;
  };
  Tensor x = input;
  Tensor grad(input.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double original = x[i];
    x[i] = original + step;
    const double plus = objective(x);
    x[i] = original - step;
    const double minus = objective(x);
    x[i] = original;
    grad[i] = (plus - minus) / (2.0 * step);
  }
  return grad;
}

}  // namespace attrib
