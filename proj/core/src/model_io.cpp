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

#include <algorithm>
#include <string>

#include "attrib/binary_io.hpp"
#include "attrib/error.hpp"
#include "attrib/model.hpp"

namespace attrib {
namespace {

constexpr std::string_view kModelMagic = "ATTRIBMDL";
constexpr std::uint32_t kModelVersion = 1;

void write_blob(ByteWriter& w, const Tensor& t) {
  w.u64(t.size());
  w.f64s(t.values());
}

Tensor read_blob(ByteReader& r, const Shape& expected, const char* what) {
  const std::uint64_t n = r.u64();
  if (n != shape_size(expected)) {
    throw DecodeError(DecodeError::Kind::kMalformed,
                      std::string("model file: ") + what + " blob has " +
                          std::to_string(n) + " values, expected " +
                          std::to_string(shape_size(expected)));
  }
  return Tensor(expected, r.f64s(n));
}

}  // namespace

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  ByteWriter w;
  w.bytes(kModelMagic);
  w.u32(kModelVersion);

  const ModelConfig& c = model.config();
  w.u64(c.input_side);
  w.f64(c.learning_rate);
  w.f64(c.momentum);
  w.u64(c.epochs);
  w.u64(c.batch_size);
  w.u64(c.seed);
  w.u32(static_cast<std::uint32_t>(c.layers.size()));
  for (const LayerSpec& spec : c.layers) {
    w.u8(static_cast<std::uint8_t>(spec.kind));
    w.u64(spec.out_channels);
    w.u64(spec.kernel);
    w.u64(spec.out_features);
  }

  const TrainingMetadata& m = model.metadata();
  w.f64(m.train_balanced_accuracy);
  w.f64(m.test_balanced_accuracy);
  w.u64(m.seed);
  w.u64(m.epochs_run);
  w.f64(m.final_loss);

  for (const Layer& layer : model.network().layers()) {
    if (!layer.has_parameters()) continue;
    write_blob(w, layer.weights);
    write_blob(w, layer.bias);
  }
  w.write_file(path);
}

TrainedModel load_model(const std::filesystem::path& path) {
  ByteReader r = ByteReader::from_file(path);
  const std::size_t head = std::min(r.remaining(), kModelMagic.size());
  if (r.bytes(head) != kModelMagic.substr(0, head)) {
    throw DecodeError(DecodeError::Kind::kBadMagic, path.string() + ": not an ATTRIBMDL file");
  }
  if (head < kModelMagic.size()) {
    throw DecodeError(DecodeError::Kind::kTruncated, path.string() + ": truncated magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kModelVersion) {
    throw DecodeError(DecodeError::Kind::kBadVersion,
                      path.string() + ": unsupported model version " + std::to_string(version));
  }

  ModelConfig c;
  c.input_side = r.u64();
  c.learning_rate = r.f64();
  c.momentum = r.f64();
  c.epochs = r.u64();
  c.batch_size = r.u64();
  c.seed = r.u64();
  const std::uint32_t n_layers = r.u32();
  if (n_layers > 4096) {
    throw DecodeError(DecodeError::Kind::kMalformed, path.string() + ": implausible layer count");
  }
  c.layers.clear();
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    LayerSpec spec;
    const std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(LayerKind::kSigmoid)) {
      throw DecodeError(DecodeError::Kind::kMalformed, path.string() + ": unknown layer kind");
    }
    spec.kind = static_cast<LayerKind>(kind);
    spec.out_channels = r.u64();
    spec.kernel = r.u64();
    spec.out_features = r.u64();
    c.layers.push_back(spec);
  }

  TrainingMetadata m;
  m.train_balanced_accuracy = r.f64();
  m.test_balanced_accuracy = r.f64();
  m.seed = r.u64();
  m.epochs_run = r.u64();
  m.final_loss = r.f64();

  Network network;
  try {
    network = Network({1, c.input_side, c.input_side}, c.layers);
  } catch (const ConfigError& e) {
    throw DecodeError(DecodeError::Kind::kMalformed, path.string() + ": " + e.what());
  }
  for (Layer& layer : network.mutable_layers()) {
    if (!layer.has_parameters()) continue;
    layer.weights = read_blob(r, layer.weights.shape(), "weight");
    layer.bias = read_blob(r, layer.bias.shape(), "bias");
  }
  if (r.remaining() != 0) {
    throw DecodeError(DecodeError::Kind::kMalformed, path.string() + ": trailing bytes");
  }
  try {
    return TrainedModel(std::move(c), std::move(network), m);
  } catch (const ConfigError& e) {
    throw DecodeError(DecodeError::Kind::kMalformed, path.string() + ": " + e.what());
  }
}

}  // namespace attrib
