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

#pragma once

#include <cstdint>
#include <string_view>

namespace attrib {

// Stateless counter-based random draws: every value is a pure function of
// (seed, stream, counter), so parallel consumers reproduce bit-identically
// regardless of evaluation order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const;
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform(std::uint64_t stream, std::uint64_t counter) const;
  // Standard normal via Box-Muller on two sub-draws of `counter`.
  double normal(std::uint64_t stream, std::uint64_t counter) const;
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t stream, std::uint64_t counter,
                      std::uint64_t n) const;

 private:
  std::uint64_t seed_;
};

// Sequential facade over one CounterRng stream.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t stream)
      : rng_(seed), stream_(stream) {}

  std::uint64_t bits() { return rng_.bits(stream_, counter_++); }
  double uniform() { return rng_.uniform(stream_, counter_++); }
  double normal() { return rng_.normal(stream_, counter_++); }
  std::uint64_t below(std::uint64_t n) {
    return rng_.below(stream_, counter_++, n);
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  CounterRng rng_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

// Labeled seed derivation: independent child seeds per pipeline stage.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace attrib
