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

// Pixel-importance estimators over a TrainedModel's class score S_c, the
// uniform random baseline, and heatmap post-processing.
//
// Gradient-based estimators differentiate the pre-sigmoid class score, never
// the probability; the two give per-image proportional gradients.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "attrib/image.hpp"
#include "attrib/model.hpp"

namespace attrib {

enum class EstimatorKind : std::uint8_t {
  kBackprop,
  kDeconvolution,
  kIntegratedGradients,
  kIntegratedGradientsBW,
  kExpectedGradients,
  kSmoothGrad,
  kSmoothGradSquared,
  kRandom,
};

std::span<const EstimatorKind> all_estimators();
// Stable machine name: "backprop", "deconvolution", "intgrad", "intgrad_bw",
// "expected_grad", "smoothgrad", "smoothgrad_sq", "random".
std::string estimator_id(EstimatorKind kind);
// Table label: "Backpropagation", "IntGradBW", "SmoothGradSQ", ...
std::string estimator_display_name(EstimatorKind kind);
std::optional<EstimatorKind> parse_estimator(std::string_view id);
// IntGrad, IntGradBW and ExpectedGrad: the ones subject to sign inversion.
bool is_path_method(EstimatorKind kind);

enum class ReferencePolicy : std::uint8_t { kBlack, kBlackAndWhite, kTrainingSet };

std::string reference_policy_name(ReferencePolicy policy);

struct EstimatorParams {
  std::size_t steps = 25;          // m, integrated gradients
  std::size_t noise_samples = 15;  // n, SmoothGrad
  double noise_sigma = 0.15;       // fraction of the [0, 1] intensity range
  ReferencePolicy reference = ReferencePolicy::kBlack;
  std::size_t reference_samples = 25;  // expected gradients draws
  std::uint64_t seed = 0;

  // Throws ParameterError.
  void validate() const;
};

struct Heatmap {
  Image scores;
  EstimatorKind estimator = EstimatorKind::kBackprop;
  std::string provenance;
  bool absolute = false;

  std::size_t rows() const { return scores.rows(); }
  std::size_t cols() const { return scores.cols(); }
};

// e = dS_c/dx.
Heatmap backprop_saliency(const TrainedModel& model, const Image& image, int cls);

// Deconvnet backward from the class score: transposed convolutions, relu on
// the backward signal, unpooling through the forward switches.
Heatmap deconvolution_saliency(const TrainedModel& model, const Image& image, int cls);

// Right-endpoint Riemann path integral from `reference` to `image`:
// e_i = (x_i - x'_i) / m * sum_{k=1..m} dS_c(x' + k/m (x - x'))/dx_i.
Image integrated_gradients_from(const TrainedModel& model, const Image& image, int cls,
                                const Image& reference, std::size_t steps);

// params.reference selects black (x' = 0) or black-and-white (mean of the
// x' = 0 and x' = 1 maps). Throws ParameterError for m = 0 or kTrainingSet.
Heatmap integrated_gradients(const TrainedModel& model, const Image& image, int cls,
                             const EstimatorParams& params);

// Monte-Carlo mean over (x' from the pool, alpha ~ U(0, 1)) of
// (x - x') * dS_c(x' + alpha (x - x'))/dx. Throws ParameterError on an
// empty pool or zero sample count.
Heatmap expected_gradients(const TrainedModel& model, const Image& image, int cls,
                           const EstimatorParams& params,
                           std::span<const Image* const> reference_pool);

// Mean of backprop maps at x + N(0, sigma^2); `squared` squares each map
// before averaging.
Heatmap smoothgrad(const TrainedModel& model, const Image& image, int cls,
                   const EstimatorParams& params, bool squared);

// i.i.d. U(0, 1) scores.
Heatmap random_baseline(std::size_t rows, std::size_t cols, std::uint64_t seed);

// Dispatches on `kind`. The pool is only read by kExpectedGradients.
Heatmap compute_heatmap(EstimatorKind kind, const TrainedModel& model,
                        const Image& image, int cls, const EstimatorParams& params,
                        std::span<const Image* const> reference_pool = {});

struct PostprocessOps {
  bool sign_invert_if_class0 = false;
  bool absolute = false;
  bool minmax_normalize = false;
};

// Applies the flags in declaration order. Sign inversion only touches path
// methods and only when predicted_class == 0. Min-max maps a constant map to
// all zeros.
Heatmap postprocess(const Heatmap& heatmap, const PostprocessOps& ops, int predicted_class);

// Min-max normalization of a score grid to [0, 1]; constant -> zeros.
Image minmax_normalized(const Image& scores);

}  // namespace attrib
