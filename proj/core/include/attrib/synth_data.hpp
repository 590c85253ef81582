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

// Procedural two-class "pseudo-CT" slices with pixel-exact relevance masks.
//
// Every scene is a body ellipse containing two darker lung ellipses, one
// heart disc and a few vessel discs. Class 1 adds a fixed contrast delta to
// the disc pixels before noise; the mask is exactly the union of the discs.
// Scene geometry and noise depend only on the per-sample scene seed, so a
// sample re-rendered with a flipped label differs only inside its mask.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "attrib/image.hpp"

namespace attrib {

template <typename T>
struct Range {
  T lo;
  T hi;
};

struct SceneParams {
  std::size_t side = 64;

  double body_center_jitter = 2.0;
  Range<double> body_semi_x{24.0, 29.0};
  Range<double> body_semi_y{19.0, 24.0};
  Range<double> body_intensity{0.40, 0.50};

  Range<double> lung_offset_x{10.0, 13.0};
  Range<double> lung_semi_x{6.0, 8.0};
  Range<double> lung_semi_y{10.0, 14.0};
  Range<double> lung_intensity{0.08, 0.18};

  Range<double> heart_radius{4.5, 6.5};
  Range<std::size_t> vessel_count{1, 4};
  Range<double> vessel_radius{2.0, 3.5};
  Range<double> vessel_intensity{0.38, 0.50};

  double contrast_delta = 0.35;
  double noise_sigma = 0.02;
  std::uint64_t seed = 0;

  // Throws ConfigError on empty ranges, non-positive sizes, or a contrast
  // delta that does not exceed three noise standard deviations.
  void validate() const;
};

enum class Split : std::uint8_t { kTrain, kTest, kEval };

std::string split_name(Split split);
Split parse_split(const std::string& name);

struct LabeledSample {
  std::size_t id = 0;
  Image image;
  int label = 0;  // 1 = contrast
  MaskImage mask;
  Split split = Split::kTrain;
};

struct SplitSpec {
  double train_fraction = 0.8;
  // Taken from the front of the held-out samples.
  std::size_t eval_count = 100;
};

struct ClassCounts {
  std::size_t negatives = 0;
  std::size_t positives = 0;
};

struct Dataset {
  std::vector<LabeledSample> samples;

  std::vector<const LabeledSample*> select(Split split) const;
  // Test and eval samples together: everything not used for training.
  std::vector<const LabeledSample*> held_out() const;
  ClassCounts counts(Split split) const;
};

// Renders one scene. Throws GenerationError when the discs cannot be placed
// inside the body ellipse.
LabeledSample render_scene(const SceneParams& params, std::uint64_t scene_seed,
                           int label);

// Deterministic in params.seed. Label i is 1 with probability `balance`.
// The first round(n * train_fraction) samples are training data; of the rest
// the first eval_count form the evaluation subset.
Dataset generate_dataset(const SceneParams& params, std::size_t n,
                         double balance, const SplitSpec& split = {});

// Writes images/<id>.pgm, masks/<id>.pgm and manifest.csv under `dir`.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
// Reads a manifest.csv written by write_dataset (paths relative to it).
Dataset read_dataset(const std::filesystem::path& manifest);

}  // namespace attrib
