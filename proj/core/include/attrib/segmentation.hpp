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

// Graph-based segmentation (Felzenszwalb & Huttenlocher) on a 4-connected
// pixel grid, and per-region pooling of heatmap scores.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "attrib/image.hpp"

namespace attrib {

struct FelzParams {
  // Scale on the 8-bit intensity range: the merge threshold uses k / 255 for
  // images in [0, 1].
  double k = 80.0;
  std::size_t min_size = 20;
  double sigma = 0.8;

  void validate() const;  // throws ParameterError
};

// Partition of an image into regions labelled [0, region_count).
struct RegionMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int32_t> labels;
  std::size_t region_count = 0;
  std::vector<std::size_t> sizes;  // pixels per region

  std::int32_t at(std::size_t r, std::size_t c) const { return labels[r * cols + c]; }
  std::size_t largest_region_size() const;  // pixels in the biggest region
};

// Separable Gaussian blur with replicated borders; sigma = 0 is the identity.
Image gaussian_smooth(const Image& image, double sigma);

// Edge weight = |difference| of smoothed intensities. Edges are processed in
// nondecreasing weight (ties by creation order, i.e. pixel index); C1 and C2
// merge iff w <= min(Int(C1) + k'/|C1|, Int(C2) + k'/|C2|) with k' = k / 255.
// Regions smaller than min_size are then merged along their lowest-weight
// boundary edge.
// An image with fewer than min_size pixels yields a single region.
RegionMap felzenszwalb_segment(const Image& image, const FelzParams& params);

// Returns an empty string when `map` is a valid partition with 4-connected
// regions of at least min_size pixels, else a description of the violation.
std::string check_partition(const RegionMap& map, std::size_t min_size);

struct RegionScore {
  std::int32_t region = 0;
  double mean = 0.0;
  std::size_t pixel_count = 0;
};

// Regions sorted by mean score, descending; equal means keep lower id first.
struct RankedRegions {
  std::vector<RegionScore> regions;
};

// Throws ContractError when the map and the scores differ in shape.
RankedRegions region_mean_scores(const RegionMap& regions, const Image& scores);

// 8/16-bit PGM with maxval = region count, for inspection.
void write_region_map_pgm(const RegionMap& regions, const std::filesystem::path& path);

}  // namespace attrib
