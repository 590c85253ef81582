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

#include <benchmark/benchmark.h>

#include <vector>

#include "attrib/estimators.hpp"
#include "attrib/metrics.hpp"
#include "attrib/segmentation.hpp"
#include "bench_common.hpp"

namespace attrib {
namespace {

std::vector<Heatmap> random_maps() {
  std::vector<Heatmap> maps;
  for (std::size_t i = 0; i < bench::scenes().size(); ++i) {
    maps.push_back(random_baseline(64, 64, i));
  }
  return maps;
}

void BM_Felzenszwalb(benchmark::State& state) {
  const Image& x = bench::scenes()[0].image;
  for (auto _ : state) benchmark::DoNotOptimize(felzenszwalb_segment(x, FelzParams{}));
}
BENCHMARK(BM_Felzenszwalb)->Unit(benchmark::kMicrosecond);

// Both orders over the default 41-point grid, per 16 images.
void BM_PerturbationCurves(benchmark::State& state) {
  std::vector<const LabeledSample*> samples;
  for (const LabeledSample& s : bench::scenes()) samples.push_back(&s);
  const auto maps = random_maps();
  const auto grid = default_fraction_grid();
  for (auto _ : state) {
    for (PerturbationOrder order :
         {PerturbationOrder::kMostImportantFirst, PerturbationOrder::kLeastImportantFirst}) {
      benchmark::DoNotOptimize(
          perturbation_curve(bench::default_model(), samples, maps, order, grid));
    }
  }
}
BENCHMARK(BM_PerturbationCurves)->Unit(benchmark::kMillisecond);

void BM_RocCurve(benchmark::State& state) {
  std::vector<MaskImage> masks;
  for (const LabeledSample& s : bench::scenes()) masks.push_back(s.mask);
  const auto maps = random_maps();
  for (auto _ : state) benchmark::DoNotOptimize(roc_curve_mean(maps, masks));
}
BENCHMARK(BM_RocCurve)->Unit(benchmark::kMillisecond);

void BM_DscCurve(benchmark::State& state) {
  std::vector<MaskImage> masks;
  std::vector<RegionMap> regions;
  for (const LabeledSample& s : bench::scenes()) {
    masks.push_back(s.mask);
    regions.push_back(felzenszwalb_segment(s.image, FelzParams{}));
  }
  const auto maps = random_maps();
  for (auto _ : state) {
    benchmark::DoNotOptimize(dsc_curve(maps, regions, masks, default_percent_grid()));
  }
}
BENCHMARK(BM_DscCurve)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace attrib
