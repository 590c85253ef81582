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

#include "attrib/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "attrib/binary_io.hpp"
#include "attrib/error.hpp"
#include "attrib/parallel.hpp"

namespace attrib {
namespace {

void check_same_grid(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || !std::equal(a.begin(), a.end(), b.begin())) {
    throw ContractError("curves are defined on different grids");
  }
}

std::vector<std::vector<double>> read_csv_rows(const std::filesystem::path& path,
                                               const std::string& header,
                                               std::size_t columns) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw DecodeError(DecodeError::Kind::kBadHeader,
                      path.string() + ": expected header '" + header + "'");
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + comma, v);
      if (ec != std::errc() || ptr != line.data() + comma) {
        throw DecodeError(DecodeError::Kind::kMalformed, path.string() + ": bad number in '" +
                                                             line + "'");
      }
      row.push_back(v);
      pos = comma + 1;
    }
    if (row.size() != columns) {
      throw DecodeError(DecodeError::Kind::kMalformed,
                        path.string() + ": wrong column count in '" + line + "'");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void finish_dsc_summary(DscCurve& curve) {
  curve.max_dsc = 0.0;
  curve.argmax_percent = curve.percents.empty() ? 0.0 : curve.percents.front();
  for (std::size_t j = 0; j < curve.percents.size(); ++j) {
    if (curve.mean_dsc[j] > curve.max_dsc) {
      curve.max_dsc = curve.mean_dsc[j];
      curve.argmax_percent = curve.percents[j];
    }
  }
}

}  // namespace

std::string order_name(PerturbationOrder order) {
  return order == PerturbationOrder::kMostImportantFirst ? "MiF" : "LiF";
}

std::vector<double> default_fraction_grid() {
  std::vector<double> grid(41);
  for (std::size_t j = 0; j < grid.size(); ++j) grid[j] = static_cast<double>(j) / 40.0;
  return grid;
}

std::vector<std::size_t> pixel_ranking(const Image& scores, PerturbationOrder order) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  if (order == PerturbationOrder::kLeastImportantFirst) std::reverse(idx.begin(), idx.end());
  return idx;
}

std::size_t masked_pixel_count(double fraction, std::size_t pixel_count) {
  const double k = std::round(std::clamp(fraction, 0.0, 1.0) * static_cast<double>(pixel_count));
  return std::min(pixel_count, static_cast<std::size_t>(k));
}

double perturbation_value(int label) { return label == 1 ? 0.0 : 1.0; }

PerturbationCurve perturbation_curve(const TrainedModel& model,
                                     std::span<const LabeledSample* const> samples,
                                     std::span<const Heatmap> heatmaps,
                                     PerturbationOrder order,
                                     std::span<const double> fractions, std::size_t jobs) {
  if (samples.size() != heatmaps.size()) {
    throw ContractError("need exactly one heatmap per evaluation sample");
  }
  if (fractions.empty()) throw ContractError("empty fraction grid");
  for (std::size_t j = 1; j < fractions.size(); ++j) {
    if (!(fractions[j] > fractions[j - 1])) {
      throw ContractError("fraction grid must be strictly increasing");
    }
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!heatmaps[i].scores.same_shape(samples[i]->image)) {
      throw ContractError("heatmap " + std::to_string(i) + " does not match its image");
    }
  }

  // predictions[i][j]: class predicted for sample i at fraction j.
  std::vector<std::vector<int>> predictions(samples.size(),
                                            std::vector<int>(fractions.size(), 0));
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    const LabeledSample& sample = *samples[i];
    const std::vector<std::size_t> ranking = pixel_ranking(heatmaps[i].scores, order);
    const double value = perturbation_value(sample.label);
    Image masked = sample.image;
    std::size_t done = 0;
    for (std::size_t j = 0; j < fractions.size(); ++j) {
      const std::size_t target = masked_pixel_count(fractions[j], masked.size());
      for (; done < target; ++done) masked[ranking[done]] = value;
      predictions[i][j] = predict_class(model, masked);
    }
  });

  PerturbationCurve curve;
  curve.order = order;
  curve.fractions.assign(fractions.begin(), fractions.end());
  std::vector<int> labels;
  for (const LabeledSample* s : samples) labels.push_back(s->label);
  std::vector<int> column(samples.size());
  for (std::size_t j = 0; j < fractions.size(); ++j) {
    for (std::size_t i = 0; i < samples.size(); ++i) column[i] = predictions[i][j];
    curve.accuracy.push_back(balanced_accuracy(labels, column));
  }
  return curve;
}

double fidelity(const PerturbationCurve& mif, const PerturbationCurve& lif) {
  check_same_grid(mif.fractions, lif.fractions);
  if (mif.accuracy.size() != mif.fractions.size() ||
      lif.accuracy.size() != lif.fractions.size()) {
    throw ContractError("curve has a mismatched accuracy count");
  }
  double area = 0.0;
  for (std::size_t j = 1; j < mif.fractions.size(); ++j) {
    const double width = mif.fractions[j] - mif.fractions[j - 1];
    const double left = lif.accuracy[j - 1] - mif.accuracy[j - 1];
    const double right = lif.accuracy[j] - mif.accuracy[j];
    area += width * 0.5 * (left + right);
  }
  return area;
}

Image rank_normalized(const Image& scores) {
  Image out(scores.rows(), scores.cols(), 0.0);
  if (scores.empty()) return out;
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::size_t rank = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k > 0 && scores[idx[k]] != scores[idx[k - 1]]) rank = k;
    out[idx[k]] = static_cast<double>(rank);
  }
  return minmax_normalized(out);
}

RocCurve roc_curve_mean(std::span<const Heatmap> heatmaps, std::span<const MaskImage> masks,
                        std::size_t threshold_count, RocNormalization normalization) {
  if (heatmaps.size() != masks.size()) {
    throw ContractError("need exactly one mask per heatmap");
  }
  if (threshold_count < 2) throw ParameterError("ROC needs at least two thresholds");
  RocCurve curve;
  curve.thresholds.resize(threshold_count);
  for (std::size_t j = 0; j < threshold_count; ++j) {
    curve.thresholds[j] = 1.0 - static_cast<double>(j) / static_cast<double>(threshold_count - 1);
  }
  curve.mean_tpr.assign(threshold_count, 0.0);
  curve.mean_fpr.assign(threshold_count, 0.0);

  for (std::size_t i = 0; i < heatmaps.size(); ++i) {
    const MaskImage& mask = masks[i];
    if (!mask.same_shape(heatmaps[i].scores)) {
      throw ContractError("mask " + std::to_string(i) + " does not match its heatmap");
    }
    const std::size_t positives = mask.count();
    const std::size_t negatives = mask.size() - positives;
    if (positives == 0 || negatives == 0) {
      curve.excluded.push_back(i);
      continue;
    }
    const Image norm = normalization == RocNormalization::kMinMax
                           ? minmax_normalized(heatmaps[i].scores)
                           : rank_normalized(heatmaps[i].scores);
    for (std::size_t j = 0; j < threshold_count; ++j) {
      const double t = curve.thresholds[j];
      std::size_t tp = 0;
      std::size_t fp = 0;
      for (std::size_t p = 0; p < norm.size(); ++p) {
        if (norm[p] > t) (mask[p] ? tp : fp) += 1;
      }
      curve.mean_tpr[j] += static_cast<double>(tp) / static_cast<double>(positives);
      curve.mean_fpr[j] += static_cast<double>(fp) / static_cast<double>(negatives);
    }
    ++curve.images_used;
  }
  if (curve.images_used == 0) {
    throw ContractError("no image has a mask with both positive and negative pixels");
  }
  for (std::size_t j = 0; j < threshold_count; ++j) {
    curve.mean_tpr[j] /= static_cast<double>(curve.images_used);
    curve.mean_fpr[j] /= static_cast<double>(curve.images_used);
  }
  return curve;
}

AucResult auc(const RocCurve& curve) {
  if (curve.mean_tpr.empty()) throw ContractError("empty ROC curve");
  AucResult result;
  result.mean_tpr = std::accumulate(curve.mean_tpr.begin(), curve.mean_tpr.end(), 0.0) /
                    static_cast<double>(curve.mean_tpr.size());
  // Descending thresholds give nondecreasing FPR; bracket with the endpoints.
  std::vector<std::pair<double, double>> points;
  points.reserve(curve.mean_fpr.size() + 2);
  points.emplace_back(0.0, 0.0);
  for (std::size_t j = 0; j < curve.mean_fpr.size(); ++j) {
    points.emplace_back(curve.mean_fpr[j], curve.mean_tpr[j]);
  }
  points.emplace_back(1.0, 1.0);
  std::stable_sort(points.begin(), points.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t k = 1; k < points.size(); ++k) {
    result.trapezoidal += (points[k].first - points[k - 1].first) * 0.5 *
                          (points[k].second + points[k - 1].second);
  }
  return result;
}

MaskImage xrai_top_percent(const RankedRegions& ranked, const RegionMap& regions,
                           double percent) {
  if (!(percent > 0.0 && percent <= 100.0)) {
    throw ParameterError("percent must lie in (0, 100]");
  }
  const std::size_t total = regions.rows * regions.cols;
  const double target = percent / 100.0 * static_cast<double>(total);
  std::vector<std::uint8_t> include(regions.region_count, 0);
  std::size_t covered = 0;
  for (const RegionScore& r : ranked.regions) {
    if (static_cast<double>(covered) >= target) break;
    include[static_cast<std::size_t>(r.region)] = 1;
    covered += r.pixel_count;
  }
  MaskImage out(regions.rows, regions.cols);
  for (std::size_t i = 0; i < total; ++i) {
    out.set(i, include[static_cast<std::size_t>(regions.labels[i])] != 0);
  }
  return out;
}

double dsc(const MaskImage& x, const MaskImage& y) {
  if (!x.same_shape(y)) throw ContractError("DSC masks differ in shape");
  std::size_t both = 0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    nx += x[i];
    ny += y[i];
    both += x[i] && y[i];
  }
  if (nx + ny == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(nx + ny);
}

std::vector<double> default_percent_grid() {
  return {1, 2, 3, 4, 5, 7.5, 10, 15, 20, 30, 50};
}

DscCurve dsc_curve(std::span<const Heatmap> heatmaps, std::span<const RegionMap> regions,
                   std::span<const MaskImage> masks, std::span<const double> percents) {
  if (heatmaps.size() != regions.size() || heatmaps.size() != masks.size()) {
    throw ContractError("need one heatmap, region map and mask per sample");
  }
  if (heatmaps.empty()) throw ContractError("DSC curve over an empty set");
  DscCurve curve;
  curve.percents.assign(percents.begin(), percents.end());
  curve.mean_dsc.assign(percents.size(), 0.0);
  for (std::size_t i = 0; i < heatmaps.size(); ++i) {
    const RankedRegions ranked = region_mean_scores(regions[i], heatmaps[i].scores);
    for (std::size_t j = 0; j < percents.size(); ++j) {
      curve.mean_dsc[j] += dsc(xrai_top_percent(ranked, regions[i], percents[j]), masks[i]);
    }
  }
  for (double& v : curve.mean_dsc) v /= static_cast<double>(heatmaps.size());
  finish_dsc_summary(curve);
  return curve;
}

DscCurve dsc_curve(std::span<const Heatmap> heatmaps, std::span<const Image> images,
                   std::span<const MaskImage> masks, const FelzParams& felz,
                   std::span<const double> percents) {
  if (images.size() != heatmaps.size()) {
    throw ContractError("need one image per heatmap");
  }
  std::vector<RegionMap> regions;
  regions.reserve(images.size());
  for (const Image& image : images) regions.push_back(felzenszwalb_segment(image, felz));
  return dsc_curve(heatmaps, regions, masks, percents);
}

std::string format_real(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void write_perturbation_csv(const PerturbationCurve& mif, const PerturbationCurve& lif,
                            const std::filesystem::path& path) {
  check_same_grid(mif.fractions, lif.fractions);
  std::string out = "fraction,acc_mif,acc_lif\n";
  for (std::size_t j = 0; j < mif.fractions.size(); ++j) {
    out += format_real(mif.fractions[j]) + "," + format_real(mif.accuracy[j]) + "," +
           format_real(lif.accuracy[j]) + "\n";
  }
  write_file(path, out);
}

void write_roc_csv(const RocCurve& curve, const std::filesystem::path& path) {
  std::string out = "threshold,mean_fpr,mean_tpr\n";
  for (std::size_t j = 0; j < curve.thresholds.size(); ++j) {
    out += format_real(curve.thresholds[j]) + "," + format_real(curve.mean_fpr[j]) + "," +
           format_real(curve.mean_tpr[j]) + "\n";
  }
  write_file(path, out);
}

void write_dsc_csv(const DscCurve& curve, const std::filesystem::path& path) {
  std::string out = "percent,mean_dsc\n";
  for (std::size_t j = 0; j < curve.percents.size(); ++j) {
    out += format_real(curve.percents[j]) + "," + format_real(curve.mean_dsc[j]) + "\n";
  }
  write_file(path, out);
}

std::pair<PerturbationCurve, PerturbationCurve> read_perturbation_csv(
    const std::filesystem::path& path) {
  const auto rows = read_csv_rows(path, "fraction,acc_mif,acc_lif", 3);
  PerturbationCurve mif;
  PerturbationCurve lif;
  mif.order = PerturbationOrder::kMostImportantFirst;
  lif.order = PerturbationOrder::kLeastImportantFirst;
  for (const auto& row : rows) {
    mif.fractions.push_back(row[0]);
    lif.fractions.push_back(row[0]);
    mif.accuracy.push_back(row[1]);
    lif.accuracy.push_back(row[2]);
  }
  return {std::move(mif), std::move(lif)};
}

RocCurve read_roc_csv(const std::filesystem::path& path) {
  const auto rows = read_csv_rows(path, "threshold,mean_fpr,mean_tpr", 3);
  RocCurve curve;
  for (const auto& row : rows) {
    curve.thresholds.push_back(row[0]);
    curve.mean_fpr.push_back(row[1]);
    curve.mean_tpr.push_back(row[2]);
  }
  return curve;
}

DscCurve read_dsc_csv(const std::filesystem::path& path) {
  const auto rows = read_csv_rows(path, "percent,mean_dsc", 2);
  DscCurve curve;
  for (const auto& row : rows) {
    curve.percents.push_back(row[0]);
    curve.mean_dsc.push_back(row[1]);
  }
  finish_dsc_summary(curve);
  return curve;
}

}  // namespace attrib
