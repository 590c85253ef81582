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

#include "attrib/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "attrib/error.hpp"
#include "attrib/pgm.hpp"

namespace attrib {
namespace {

constexpr double kIntensityLevels = 255.0;

struct Edge {
  double weight;
  std::uint32_t a;
  std::uint32_t b;
};

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0), size_(n, 1), internal_(n, 0.0) {
    std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Joins two roots; the merged component's internal difference becomes
  // `weight` (edges arrive in nondecreasing order).
  std::uint32_t join(std::uint32_t a, std::uint32_t b, double weight) {
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    if (rank_[a] == rank_[b]) ++rank_[a];
    internal_[a] = std::max({internal_[a], internal_[b], weight});
    return a;
  }

  std::size_t size(std::uint32_t root) const { return size_[root]; }
  double internal(std::uint32_t root) const { return internal_[root]; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint8_t> rank_;
  std::vector<std::size_t> size_;
  std::vector<double> internal_;
};

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
    kernel[i + radius] = v;
    sum += v;
  }
  for (double& v : kernel) v /= sum;
  return kernel;
}

}  // namespace

void FelzParams::validate() const {
  if (!(k > 0.0)) throw ParameterError("Felzenszwalb k must be > 0");
  if (min_size == 0) throw ParameterError("Felzenszwalb min_size must be >= 1");
  if (!(sigma >= 0.0)) throw ParameterError("Felzenszwalb sigma must be >= 0");
}

std::size_t RegionMap::largest_region_size() const {
  return sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
}

Image gaussian_smooth(const Image& image, double sigma) {
  if (sigma <= 0.0 || image.empty()) return image;
  const std::vector<double> kernel = gaussian_kernel(sigma);
  const int radius = static_cast<int>(kernel.size() / 2);
  const int rows = static_cast<int>(image.rows());
  const int cols = static_cast<int>(image.cols());
  Image tmp(image.rows(), image.cols());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double sum = 0.0;
      for (int j = -radius; j <= radius; ++j) {
        const int cc = std::clamp(c + j, 0, cols - 1);
        sum += kernel[j + radius] * image.at(r, cc);
      }
      tmp.at(r, c) = sum;
    }
  }
  Image out(image.rows(), image.cols());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double sum = 0.0;
      for (int j = -radius; j <= radius; ++j) {
        const int rr = std::clamp(r + j, 0, rows - 1);
        sum += kernel[j + radius] * tmp.at(rr, c);
      }
      out.at(r, c) = sum;
    }
  }
  return out;
}

RegionMap felzenszwalb_segment(const Image& image, const FelzParams& params) {
  params.validate();
  if (image.empty()) throw ContractError("cannot segment an empty image");
  const Image smooth = gaussian_smooth(image, params.sigma);
  const std::size_t rows = image.rows();
  const std::size_t cols = image.cols();
  const std::size_t n = rows * cols;

  std::vector<Edge> edges;
  edges.reserve(2 * n);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const auto i = static_cast<std::uint32_t>(r * cols + c);
      if (c + 1 < cols) {
        edges.push_back({std::abs(smooth[i] - smooth[i + 1]), i, i + 1});
      }
      if (r + 1 < rows) {
        const auto below = static_cast<std::uint32_t>(i + cols);
        edges.push_back({std::abs(smooth[i] - smooth[below]), i, below});
      }
    }
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const Edge& x, const Edge& y) { return x.weight < y.weight; });

  const double scale = params.k / kIntensityLevels;
  DisjointSets sets(n);
  for (const Edge& e : edges) {
    const std::uint32_t a = sets.find(e.a);
    const std::uint32_t b = sets.find(e.b);
    if (a == b) continue;
    const double ta = sets.internal(a) + scale / static_cast<double>(sets.size(a));
    const double tb = sets.internal(b) + scale / static_cast<double>(sets.size(b));
    if (e.weight <= std::min(ta, tb)) sets.join(a, b, e.weight);
  }
  for (const Edge& e : edges) {
    const std::uint32_t a = sets.find(e.a);
    const std::uint32_t b = sets.find(e.b);
    if (a == b) continue;
    if (sets.size(a) < params.min_size || sets.size(b) < params.min_size) {
      sets.join(a, b, e.weight);
    }
  }

  RegionMap map;
  map.rows = rows;
  map.cols = cols;
  map.labels.assign(n, -1);
  std::vector<std::int32_t> root_label(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t root = sets.find(static_cast<std::uint32_t>(i));
    if (root_label[root] < 0) {
      root_label[root] = static_cast<std::int32_t>(map.region_count++);
      map.sizes.push_back(0);
    }
    map.labels[i] = root_label[root];
    ++map.sizes[static_cast<std::size_t>(map.labels[i])];
  }
  return map;
}

std::string check_partition(const RegionMap& map, std::size_t min_size) {
  const std::size_t n = map.rows * map.cols;
  if (map.labels.size() != n) return "label grid has the wrong size";
  if (map.sizes.size() != map.region_count) return "size table does not match region count";
  std::vector<std::size_t> counted(map.region_count, 0);
  for (std::int32_t label : map.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= map.region_count) {
      return "label " + std::to_string(label) + " out of range";
    }
    ++counted[static_cast<std::size_t>(label)];
  }
  for (std::size_t r = 0; r < map.region_count; ++r) {
    if (counted[r] != map.sizes[r]) return "size of region " + std::to_string(r) + " is wrong";
    if (counted[r] == 0) return "region " + std::to_string(r) + " is empty";
    if (counted[r] < min_size && map.region_count > 1) {
      return "region " + std::to_string(r) + " has " + std::to_string(counted[r]) +
             " pixels, fewer than " + std::to_string(min_size);
    }
  }
  // Each region must be reachable from one seed pixel via 4-neighbours.
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<std::uint8_t> region_done(map.region_count, 0);
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start]) continue;
    const std::int32_t label = map.labels[start];
    if (region_done[static_cast<std::size_t>(label)]) {
      return "region " + std::to_string(label) + " is not 4-connected";
    }
    region_done[static_cast<std::size_t>(label)] = 1;
    std::queue<std::size_t> frontier;
    frontier.push(start);
    seen[start] = 1;
    while (!frontier.empty()) {
      const std::size_t i = frontier.front();
      frontier.pop();
      const std::size_t r = i / map.cols;
      const std::size_t c = i % map.cols;
      auto visit = [&](std::size_t j) {
        if (!seen[j] && map.labels[j] == label) {
          seen[j] = 1;
          frontier.push(j);
        }
      };
      if (c > 0) visit(i - 1);
      if (c + 1 < map.cols) visit(i + 1);
      if (r > 0) visit(i - map.cols);
      if (r + 1 < map.rows) visit(i + map.cols);
    }
  }
  return {};
}

RankedRegions region_mean_scores(const RegionMap& regions, const Image& scores) {
  if (scores.rows() != regions.rows || scores.cols() != regions.cols) {
    throw ContractError("region map and heatmap differ in shape");
  }
  std::vector<double> sums(regions.region_count, 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    sums[static_cast<std::size_t>(regions.labels[i])] += scores[i];
  }
  RankedRegions ranked;
  ranked.regions.reserve(regions.region_count);
  for (std::size_t r = 0; r < regions.region_count; ++r) {
    ranked.regions.push_back({static_cast<std::int32_t>(r),
                              sums[r] / static_cast<double>(regions.sizes[r]),
                              regions.sizes[r]});
  }
  std::stable_sort(ranked.regions.begin(), ranked.regions.end(),
                   [](const RegionScore& a, const RegionScore& b) { return a.mean > b.mean; });
  return ranked;
}

void write_region_map_pgm(const RegionMap& regions, const std::filesystem::path& path) {
  if (regions.region_count > 65535) {
    throw ContractError("too many regions for a 16-bit PGM");
  }
  RawPgm pgm{regions.rows, regions.cols,
             static_cast<std::uint32_t>(std::max<std::size_t>(1, regions.region_count)), {}};
  pgm.samples.reserve(regions.labels.size());
  for (std::int32_t label : regions.labels) {
    pgm.samples.push_back(static_cast<std::uint16_t>(label));
  }
  write_pgm_raw(pgm, path);
}

}  // namespace attrib
