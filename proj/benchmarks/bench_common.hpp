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

// Fixtures shared by the microbenchmarks: the default architecture with
// random weights (training is not needed to time the arithmetic) and
// synthetic scenes.

#pragma once

#include <vector>

#include "attrib/model.hpp"
#include "attrib/synth_data.hpp"

namespace attrib::bench {

inline const TrainedModel& default_model() {
  static const TrainedModel model = [] {
    ModelConfig config;
    Network net({1, config.input_side, config.input_side}, config.layers);
    net.initialize(1);
    return TrainedModel::from_network(std::move(net));
  }();
  return model;
}

inline const std::vector<LabeledSample>& scenes() {
  static const std::vector<LabeledSample> samples = [] {
    std::vector<LabeledSample> out;
    for (std::uint64_t seed = 0; seed < 16; ++seed) {
      out.push_back(render_scene(SceneParams{}, seed, static_cast<int>(seed % 2)));
    }
    return out;
  }();
  return samples;
}

}  // namespace attrib::bench
