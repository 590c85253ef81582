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
#include "attrib/run_config.hpp"
#include "bench_common.hpp"

namespace attrib {
namespace {

// One heatmap per iteration with the default parameters of each estimator.
void BM_Estimator(benchmark::State& state) {
  const EstimatorKind kind = all_estimators()[static_cast<std::size_t>(state.range(0))];
  state.SetLabel(estimator_id(kind));
  RunConfig config;
  const EstimatorParams params = config.params_for(kind);
  std::vector<const Image*> pool;
  for (const LabeledSample& s : bench::scenes()) pool.push_back(&s.image);
  const TrainedModel& m = bench::default_model();
  const Image& x = bench::scenes()[1].image;
  for (auto _ : state) benchmark::DoNotOptimize(compute_heatmap(kind, m, x, 1, params, pool));
}
BENCHMARK(BM_Estimator)->DenseRange(0, static_cast<int>(all_estimators().size()) - 1)
    ->Unit(benchmark::kMillisecond);

void BM_Postprocess(benchmark::State& state) {
  const Heatmap h = backprop_saliency(bench::default_model(), bench::scenes()[1].image, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(postprocess(h, variant_ops(Variant::kAbsolute), 0));
  }
}
BENCHMARK(BM_Postprocess);

}  // namespace
}  // namespace attrib
