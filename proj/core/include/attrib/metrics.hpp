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

// Evaluation metrics for importance heatmaps:
//
//  * perturbation fidelity: area between the balanced-accuracy curves obtained
//    by masking pixels least-important-first (LiF) and most-important-first
//    (MiF);
//  * ROC concordance between per-image normalized scores and binary masks;
//  * Dice overlap between XRAI-style top-p% region maps and masks.

#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attrib/estimators.hpp"
#include "attrib/image.hpp"
#include "attrib/model.hpp"
#include "attrib/segmentation.hpp"
#include "attrib/synth_data.hpp"

namespace attrib {

enum class PerturbationOrder { kMostImportantFirst, kLeastImportantFirst };

std::string order_name(PerturbationOrder order);  // "MiF" / "LiF"

// 0, 0.025, ..., 1.0 (41 points).
std::vector<double> default_fraction_grid();

struct PerturbationCurve {
  std::vector<double> fractions;
  std::vector<double> accuracy;  // balanced accuracy per fraction
  PerturbationOrder order = PerturbationOrder::kMostImportantFirst;
};

// Pixel indices in masking order. MiF sorts scores descending with ties by
// lower pixel index; LiF is exactly the reverse of MiF, so the first k MiF
// pixels and the first N - k LiF pixels partition the image.
std::vector<std::size_t> pixel_ranking(const Image& scores, PerturbationOrder order);

// Number of pixels masked at `fraction` of `pixel_count`.
std::size_t masked_pixel_count(double fraction, std::size_t pixel_count);

// Masking value used for a sample of the given label: 0 for contrast images,
// 1 otherwise.
double perturbation_value(int label);

// For each fraction, replaces the first round(f * N) ranked pixels of every
// sample with perturbation_value(label) and records the balanced accuracy of
// the model's predictions. Throws ContractError on count or shape mismatch.
PerturbationCurve perturbation_curve(const TrainedModel& model,
                                     std::span<const LabeledSample* const> samples,
                                     std::span<const Heatmap> heatmaps,
                                     PerturbationOrder order,
                                     std::span<const double> fractions,
                                     std::size_t jobs = 1);

// Trapezoidal integral of (LiF - MiF) over the fraction grid. Throws
// ContractError when the grids differ.
double fidelity(const PerturbationCurve& mif, const PerturbationCurve& lif);

enum class RocNormalization { kMinMax, kRank };

struct RocCurve {
  // Descending: thresholds[0] = 1, thresholds.back() = 0.
  std::vector<double> thresholds;
  std::vector<double> mean_tpr;
  std::vector<double> mean_fpr;
  std::size_t images_used = 0;
  // Images whose mask is empty or full (TPR or FPR undefined).
  std::vector<std::size_t> excluded;
};

// Scores are normalized per image (min-max by default), then a pixel is a
// positive prediction when its score is strictly above the threshold. TPR and
// FPR are averaged pointwise across images.
RocCurve roc_curve_mean(std::span<const Heatmap> heatmaps, std::span<const MaskImage> masks,
                        std::size_t threshold_count = 101,
                        RocNormalization normalization = RocNormalization::kMinMax);

// Per-image rank normalization: ties share their lowest rank; result in
// [0, 1] (a constant map becomes all zeros).
Image rank_normalized(const Image& scores);

struct AucResult {
  double mean_tpr = 0.0;     // mean TPR height over the threshold grid
  double trapezoidal = 0.0;  // area over (FPR, TPR) with (0,0) and (1,1) added
};

AucResult auc(const RocCurve& curve);

// Adds whole regions in rank order until they cover at least p% of pixels.
// Throws ParameterError unless 0 < p <= 100.
MaskImage xrai_top_percent(const RankedRegions& ranked, const RegionMap& regions,
                           double percent);

// 2|X & Y| / (|X| + |Y|); 1 when both are empty. Throws ContractError on a
// shape mismatch.
double dsc(const MaskImage& x, const MaskImage& y);

std::vector<double> default_percent_grid();

struct DscCurve {
  std::vector<double> percents;
  std::vector<double> mean_dsc;
  double max_dsc = 0.0;
  double argmax_percent = 0.0;
};

DscCurve dsc_curve(std::span<const Heatmap> heatmaps, std::span<const RegionMap> regions,
                   std::span<const MaskImage> masks, std::span<const double> percents);

// Segments every image first.
DscCurve dsc_curve(std::span<const Heatmap> heatmaps, std::span<const Image> images,
                   std::span<const MaskImage> masks, const FelzParams& felz,
                   std::span<const double> percents);

// Curve CSV exports. Reals use the shortest round-trip representation.
void write_perturbation_csv(const PerturbationCurve& mif, const PerturbationCurve& lif,
                            const std::filesystem::path& path);
void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path);
void write_dsc_csv(const DscCurve& curve, const std::filesystem::path& path);

// Readers for the files above; throw DecodeError on malformed input.
std::pair<PerturbationCurve, PerturbationCurve> read_perturbation_csv(
    const std::filesystem::path& path);
RocCurve read_roc_csv(const std::filesystem::path& path);
DscCurve read_dsc_csv(const std::filesystem::path& path);

std::string format_real(double value);

}  // namespace attrib
