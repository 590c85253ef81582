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

#include "attrib/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "attrib/error.hpp"
#include "attrib/rng.hpp"

namespace attrib {
namespace {

constexpr std::array<EstimatorKind, 8> kAllEstimators = {
    EstimatorKind::kBackprop,          EstimatorKind::kDeconvolution,
    EstimatorKind::kIntegratedGradients, EstimatorKind::kIntegratedGradientsBW,
    EstimatorKind::kExpectedGradients, EstimatorKind::kSmoothGrad,
    EstimatorKind::kSmoothGradSquared, EstimatorKind::kRandom,
};

std::string format_real(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

}  // namespace

std::span<const EstimatorKind> all_estimators() { return kAllEstimators; }

std::string estimator_id(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kBackprop: return "backprop";
    case EstimatorKind::kDeconvolution: return "deconvolution";
    case EstimatorKind::kIntegratedGradients: return "intgrad";
    case EstimatorKind::kIntegratedGradientsBW: return "intgrad_bw";
    case EstimatorKind::kExpectedGradients: return "expected_grad";
    case EstimatorKind::kSmoothGrad: return "smoothgrad";
    case EstimatorKind::kSmoothGradSquared: return "smoothgrad_sq";
    case EstimatorKind::kRandom: return "random";
  }
  return "unknown";
}

std::string estimator_display_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kBackprop: return "Backpropagation";
    case EstimatorKind::kDeconvolution: return "Deconvolution";
    case EstimatorKind::kIntegratedGradients: return "IntGrad";
    case EstimatorKind::kIntegratedGradientsBW: return "IntGradBW";
    case EstimatorKind::kExpectedGradients: return "ExpectedGrad";
    case EstimatorKind::kSmoothGrad: return "SmoothGrad";
    case EstimatorKind::kSmoothGradSquared: return "SmoothGradSQ";
    case EstimatorKind::kRandom: return "Random";
  }
  return "Unknown";
}

std::optional<EstimatorKind> parse_estimator(std::string_view id) {
  for (EstimatorKind kind : kAllEstimators) {
    if (estimator_id(kind) == id) return kind;
  }
  return std::nullopt;
}

bool is_path_method(EstimatorKind kind) {
  return kind == EstimatorKind::kIntegratedGradients ||
         kind == EstimatorKind::kIntegratedGradientsBW ||
         kind == EstimatorKind::kExpectedGradients;
}

std::string reference_policy_name(ReferencePolicy policy) {
  switch (policy) {
    case ReferencePolicy::kBlack: return "black";
    case ReferencePolicy::kBlackAndWhite: return "black_white";
    case ReferencePolicy::kTrainingSet: return "training_set";
  }
  return "unknown";
}

void EstimatorParams::validate() const {
  if (steps == 0) throw ParameterError("interpolation steps m must be >= 1");
  if (noise_samples == 0) throw ParameterError("noise samples n must be >= 1");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw ParameterError("noise sigma must be finite and >= 0");
  }
  if (reference_samples == 0) throw ParameterError("reference samples must be >= 1");
}

Heatmap backprop_saliency(const TrainedModel& model, const Image& image, int cls) {
  return {class_score_gradient(model, image, cls, BackwardMode::kStandard),
          EstimatorKind::kBackprop, "backprop", false};
}

Heatmap deconvolution_saliency(const TrainedModel& model, const Image& image, int cls) {
  return {class_score_gradient(model, image, cls, BackwardMode::kDeconvnet),
          EstimatorKind::kDeconvolution, "deconvolution", false};
}

Image integrated_gradients_from(const TrainedModel& model, const Image& image, int cls,
                                const Image& reference, std::size_t steps) {
  if (steps == 0) throw ParameterError("interpolation steps m must be >= 1");
  if (!reference.same_shape(image)) throw ContractError("reference/image shape mismatch");
  const std::size_t n = image.size();
  std::vector<double> sum(n, 0.0);
  Image point(image.rows(), image.cols());
  for (std::size_t k = 1; k <= steps; ++k) {
    const double alpha = static_cast<double>(k) / static_cast<double>(steps);
    for (std::size_t i = 0; i < n; ++i) {
      point[i] = reference[i] + alpha * (image[i] - reference[i]);
    }
    const Image grad = class_score_gradient(model, point, cls);
    for (std::size_t i = 0; i < n; ++i) sum[i] += grad[i];
  }
  Image out(image.rows(), image.cols());
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = (image[i] - reference[i]) * sum[i] / static_cast<double>(steps);
  }
  return out;
}

Heatmap integrated_gradients(const TrainedModel& model, const Image& image, int cls,
                             const EstimatorParams& params) {
  params.validate();
  const std::string m = "m=" + std::to_string(params.steps);
  const Image black(image.rows(), image.cols(), 0.0);
  switch (params.reference) {
    case ReferencePolicy::kBlack:
      return {integrated_gradients_from(model, image, cls, black, params.steps),
              EstimatorKind::kIntegratedGradients, "intgrad(" + m + ",ref=black)", false};
    case ReferencePolicy::kBlackAndWhite: {
      const Image white(image.rows(), image.cols(), 1.0);
      Image from_black = integrated_gradients_from(model, image, cls, black, params.steps);
      const Image from_white = integrated_gradients_from(model, image, cls, white, params.steps);
      for (std::size_t i = 0; i < from_black.size(); ++i) {
        from_black[i] = 0.5 * (from_black[i] + from_white[i]);
      }
      return {std::move(from_black), EstimatorKind::kIntegratedGradientsBW,
              "intgrad_bw(" + m + ",ref=black_white)", false};
    }
    case ReferencePolicy::kTrainingSet:
      break;
  }
  throw ParameterError("integrated gradients needs a black or black-and-white reference");
}

Heatmap expected_gradients(const TrainedModel& model, const Image& image, int cls,
                           const EstimatorParams& params,
                           std::span<const Image* const> reference_pool) {
  params.validate();
  if (reference_pool.empty()) throw ParameterError("expected gradients needs a reference pool");
  const CounterRng rng(params.seed);
  const std::size_t n = image.size();
  std::vector<double> sum(n, 0.0);
  Image point(image.rows(), image.cols());
  for (std::size_t s = 0; s < params.reference_samples; ++s) {
    const Image& ref = *reference_pool[rng.below(s, 0, reference_pool.size())];
    if (!ref.same_shape(image)) throw ContractError("reference/image shape mismatch");
    const double alpha = rng.uniform(s, 1);
    for (std::size_t i = 0; i < n; ++i) point[i] = ref[i] + alpha * (image[i] - ref[i]);
    const Image grad = class_score_gradient(model, point, cls);
    for (std::size_t i = 0; i < n; ++i) sum[i] += (image[i] - ref[i]) * grad[i];
  }
  Image out(image.rows(), image.cols());
  const double inv = 1.0 / static_cast<double>(params.reference_samples);
  for (std::size_t i = 0; i < n; ++i) out[i] = sum[i] * inv;
  return {std::move(out), EstimatorKind::kExpectedGradients,
          "expected_grad(samples=" + std::to_string(params.reference_samples) +
              ",seed=" + std::to_string(params.seed) + ")",
          false};
}

Heatmap smoothgrad(const TrainedModel& model, const Image& image, int cls,
                   const EstimatorParams& params, bool squared) {
  params.validate();
  const CounterRng rng(params.seed);
  const std::size_t n = image.size();
  std::vector<double> sum(n, 0.0);
  Image noisy(image.rows(), image.cols());
  for (std::size_t j = 0; j < params.noise_samples; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      noisy[i] = params.noise_sigma > 0.0
                     ? image[i] + params.noise_sigma * rng.normal(j, i)
                     : image[i];
    }
    const Image grad = class_score_gradient(model, noisy, cls);
    if (squared) {
      for (std::size_t i = 0; i < n; ++i) sum[i] += grad[i] * grad[i];
    } else {
      for (std::size_t i = 0; i < n; ++i) sum[i] += grad[i];
    }
  }
  Image out(image.rows(), image.cols());
  const double inv = 1.0 / static_cast<double>(params.noise_samples);
  for (std::size_t i = 0; i < n; ++i) out[i] = sum[i] * inv;
  const std::string args = "(n=" + std::to_string(params.noise_samples) +
                           ",sigma=" + format_real(params.noise_sigma) +
                           ",seed=" + std::to_string(params.seed) + ")";
  return {std::move(out),
          squared ? EstimatorKind::kSmoothGradSquared : EstimatorKind::kSmoothGrad,
          (squared ? "smoothgrad_sq" : "smoothgrad") + args, false};
}

Heatmap random_baseline(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  const CounterRng rng(seed);
  Image out(rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.uniform(0, i);
  return {std::move(out), EstimatorKind::kRandom,
          "random(seed=" + std::to_string(seed) + ")", false};
}

Heatmap compute_heatmap(EstimatorKind kind, const TrainedModel& model, const Image& image,
                        int cls, const EstimatorParams& params,
                        std::span<const Image* const> reference_pool) {
  switch (kind) {
    case EstimatorKind::kBackprop:
      return backprop_saliency(model, image, cls);
    case EstimatorKind::kDeconvolution:
      return deconvolution_saliency(model, image, cls);
    case EstimatorKind::kIntegratedGradients: {
      EstimatorParams p = params;
      p.reference = ReferencePolicy::kBlack;
      return integrated_gradients(model, image, cls, p);
    }
    case EstimatorKind::kIntegratedGradientsBW: {
      EstimatorParams p = params;
      p.reference = ReferencePolicy::kBlackAndWhite;
      return integrated_gradients(model, image, cls, p);
    }
    case EstimatorKind::kExpectedGradients:
      return expected_gradients(model, image, cls, params, reference_pool);
    case EstimatorKind::kSmoothGrad:
      return smoothgrad(model, image, cls, params, false);
    case EstimatorKind::kSmoothGradSquared:
      return smoothgrad(model, image, cls, params, true);
    case EstimatorKind::kRandom:
      return random_baseline(image.rows(), image.cols(), params.seed);
  }
  throw ParameterError("unknown estimator");
}

Image minmax_normalized(const Image& scores) {
  Image out(scores.rows(), scores.cols(), 0.0);
  if (scores.empty()) return out;
  const auto [lo, hi] = std::minmax_element(scores.values().begin(), scores.values().end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - *lo) / range;
  return out;
}

Heatmap postprocess(const Heatmap& heatmap, const PostprocessOps& ops, int predicted_class) {
  Heatmap out = heatmap;
  if (ops.sign_invert_if_class0) {
    if (is_path_method(out.estimator) && predicted_class == 0) {
      for (double& v : out.scores.values()) v = -v;
      out.provenance += "+sign_inverted";
    }
  }
  if (ops.absolute) {
    for (double& v : out.scores.values()) v = std::abs(v);
    out.absolute = true;
    out.provenance += "+abs";
  }
  if (ops.minmax_normalize) {
    out.scores = minmax_normalized(out.scores);
    out.provenance += "+minmax";
  }
  return out;
}

}  // namespace attrib
