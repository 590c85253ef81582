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

#include "attrib/network.hpp"
#include "bench_common.hpp"

namespace attrib {
namespace {

void BM_Forward(benchmark::State& state) {
  const TrainedModel& m = bench::default_model();
  const Image& x = bench::scenes()[0].image;
  for (auto _ : state) benchmark::DoNotOptimize(predict_logit(m, x));
}
BENCHMARK(BM_Forward);

void BM_ForwardBackward(benchmark::State& state) {
  const TrainedModel& m = bench::default_model();
  const Tensor x = bench::scenes()[0].image.to_tensor();
  const Tensor seed({1}, 1.0);
  const auto mode = static_cast<BackwardMode>(state.range(0));
  for (auto _ : state) {
    const auto fwd = forward(m.network(), x);
    benchmark::DoNotOptimize(backward(fwd.tape, seed, mode));
  }
}
BENCHMARK(BM_ForwardBackward)
    ->Arg(static_cast<int>(BackwardMode::kStandard))
    ->Arg(static_cast<int>(BackwardMode::kDeconvnet));

void BM_TrainingStep(benchmark::State& state) {
  const TrainedModel& m = bench::default_model();
  const Tensor x = bench::scenes()[0].image.to_tensor();
  const Tensor seed({1}, 1.0);
  for (auto _ : state) {
    const auto fwd = forward(m.network(), x);
    ParameterGradients grads;
    benchmark::DoNotOptimize(backward_with_parameters(fwd.tape, seed, grads));
  }
}
BENCHMARK(BM_TrainingStep);

}  // namespace
}  // namespace attrib
