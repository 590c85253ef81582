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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "attrib/binary_io.hpp"
#include "attrib/error.hpp"
#include "attrib/metrics.hpp"
#include "attrib/rng.hpp"
#include "test_support.hpp"

namespace attrib {
namespace {

using testing::random_image;

constexpr std::size_t kSide = 8;

Heatmap heatmap_of(Image scores, EstimatorKind kind = EstimatorKind::kBackprop) {
  return {std::move(scores), kind, estimator_id(kind), false};
}

// Scores on a 1/1024 grid, so score -> 2 * score + 5 is exact and keeps ties.
Heatmap quantized_heatmap(std::uint64_t seed) {
  Image img = random_image(kSide, kSide, seed);
  for (double& v : img.values()) v = std::floor(v * 1024.0) / 1024.0;
  return heatmap_of(std::move(img));
}

Heatmap affine(const Heatmap& h) {
  Heatmap out = h;
  for (double& v : out.scores.values()) v = 2.0 * v + 5.0;
  return out;
}

MaskImage disc_mask(std::size_t side, double cr, double cc, double radius) {
  MaskImage m(side, side);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      if (std::hypot(r - cr, c - cc) <= radius) m.set(r, c, true);
    }
  }
  return m;
}

class PerturbationTest : public ::testing::Test {
 protected:
  void SetUp() override {
    for (std::size_t i = 0; i < 24; ++i) {
      LabeledSample s;
      s.id = i;
      s.label = static_cast<int>(i % 2);
      s.image = random_image(kSide, kSide, 300 + i);
      s.mask = disc_mask(kSide, 3, 4, 2);
      samples.push_back(s);
      heatmaps.push_back(quantized_heatmap(400 + i));
    }
    for (const auto& s : samples) pointers.push_back(&s);
  }

  TrainedModel model = testing::small_conv_model(kSide, 31);
  std::vector<LabeledSample> samples;
  std::vector<const LabeledSample*> pointers;
  std::vector<Heatmap> heatmaps;
  std::vector<double> grid = default_fraction_grid();

  PerturbationCurve curve(PerturbationOrder order, const std::vector<Heatmap>& maps) const {
    return perturbation_curve(model, pointers, maps, order, grid);
  }
};

TEST(FractionGrid, FortyOnePoints) {
  const auto g = default_fraction_grid();
  ASSERT_EQ(g.size(), 41u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_DOUBLE_EQ(g[1], 0.025);
  EXPECT_EQ(default_percent_grid(),
            (std::vector<double>{1, 2, 3, 4, 5, 7.5, 10, 15, 20, 30, 50}));
}

TEST(PixelRanking, TiesByIndexAndLifIsReverse) {
  const Image s(1, 5, std::vector<double>{0.5, 0.9, 0.5, 0.1, 0.9});
  const auto mif = pixel_ranking(s, PerturbationOrder::kMostImportantFirst);
  EXPECT_EQ(mif, (std::vector<std::size_t>{1, 4, 0, 2, 3}));
  const auto lif = pixel_ranking(s, PerturbationOrder::kLeastImportantFirst);
  EXPECT_EQ(lif, (std::vector<std::size_t>{3, 2, 0, 4, 1}));
}

TEST(PixelRanking, MifPrefixAndLifPrefixPartitionThePixels) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Heatmap h = quantized_heatmap(seed);
    const auto mif = pixel_ranking(h.scores, PerturbationOrder::kMostImportantFirst);
    const auto lif = pixel_ranking(h.scores, PerturbationOrder::kLeastImportantFirst);
    const std::size_t n = mif.size();
    for (double f : default_fraction_grid()) {
      const std::size_t k = masked_pixel_count(f, n);
      const std::size_t k_rest = masked_pixel_count(1.0 - f, n);
      std::set<std::size_t> a(mif.begin(), mif.begin() + static_cast<std::ptrdiff_t>(k));
      std::set<std::size_t> b(lif.begin(), lif.begin() + static_cast<std::ptrdiff_t>(n - k));
      ASSERT_EQ(k + k_rest, n) << f;
      std::set<std::size_t> all = a;
      all.insert(b.begin(), b.end());
      EXPECT_EQ(all.size(), n);
      EXPECT_EQ(a.size() + b.size(), n);
    }
  }
}

TEST(MaskedCount, RoundsToNearest) {
  EXPECT_EQ(masked_pixel_count(0.0, 4096), 0u);
  EXPECT_EQ(masked_pixel_count(0.025, 4096), 102u);
  EXPECT_EQ(masked_pixel_count(1.0, 4096), 4096u);
  EXPECT_EQ(perturbation_value(1), 0.0);
  EXPECT_EQ(perturbation_value(0), 1.0);
}

TEST_F(PerturbationTest, EndpointsMatchTheDefinition) {
  const auto mif = curve(PerturbationOrder::kMostImportantFirst, heatmaps);
  const auto lif = curve(PerturbationOrder::kLeastImportantFirst, heatmaps);
  ASSERT_EQ(mif.accuracy.size(), 41u);
  const double unperturbed = evaluate_balanced_accuracy(model, pointers);
  EXPECT_EQ(mif.accuracy.front(), unperturbed);
  EXPECT_EQ(lif.accuracy.front(), unperturbed);
  EXPECT_EQ(mif.accuracy.back(), lif.accuracy.back());
  // Full masking: label-1 inputs become black, label-0 inputs white.
  std::vector<int> labels, preds;
  for (const auto& s : samples) {
    labels.push_back(s.label);
    preds.push_back(predict_class(model, Image(kSide, kSide, perturbation_value(s.label))));
  }
  EXPECT_EQ(mif.accuracy.back(), balanced_accuracy(labels, preds));
  for (double a : mif.accuracy) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, 1.0);
  }
}

TEST_F(PerturbationTest, MatchesDirectMaskingAtEveryFraction) {
  const auto mif = curve(PerturbationOrder::kMostImportantFirst, heatmaps);
  for (std::size_t f = 0; f < grid.size(); f += 5) {
    std::vector<int> labels, preds;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      Image x = samples[i].image;
      const auto order = pixel_ranking(heatmaps[i].scores, PerturbationOrder::kMostImportantFirst);
      for (std::size_t j = 0; j < masked_pixel_count(grid[f], x.size()); ++j) {
        x[order[j]] = perturbation_value(samples[i].label);
      }
      labels.push_back(samples[i].label);
      preds.push_back(predict_class(model, x));
    }
    EXPECT_EQ(mif.accuracy[f], balanced_accuracy(labels, preds)) << grid[f];
  }
}

TEST_F(PerturbationTest, ThreadCountDoesNotChangeTheCurve) {
  const auto one = perturbation_curve(model, pointers, heatmaps,
                                      PerturbationOrder::kMostImportantFirst, grid, 1);
  const auto four = perturbation_curve(model, pointers, heatmaps,
                                       PerturbationOrder::kMostImportantFirst, grid, 4);
  EXPECT_EQ(one.accuracy, four.accuracy);
}

TEST_F(PerturbationTest, FidelityInvariantUnderIncreasingMap) {
  std::vector<Heatmap> shifted;
  for (const auto& h : heatmaps) shifted.push_back(affine(h));
  const auto mif = curve(PerturbationOrder::kMostImportantFirst, heatmaps);
  const auto lif = curve(PerturbationOrder::kLeastImportantFirst, heatmaps);
  const auto mif2 = curve(PerturbationOrder::kMostImportantFirst, shifted);
  const auto lif2 = curve(PerturbationOrder::kLeastImportantFirst, shifted);
  EXPECT_EQ(mif.accuracy, mif2.accuracy);
  EXPECT_EQ(lif.accuracy, lif2.accuracy);
  EXPECT_EQ(fidelity(mif, lif), fidelity(mif2, lif2));
}

TEST_F(PerturbationTest, ContractErrors) {
  std::vector<Heatmap> short_list(heatmaps.begin(), heatmaps.end() - 1);
  EXPECT_THROW((void)curve(PerturbationOrder::kMostImportantFirst, short_list), ContractError);
  std::vector<Heatmap> wrong = heatmaps;
  wrong[3] = heatmap_of(Image(4, 4));
  EXPECT_THROW((void)curve(PerturbationOrder::kMostImportantFirst, wrong), ContractError);
  const std::vector<double> bad_grid{0.0, 0.5, 0.5};
  EXPECT_THROW((void)perturbation_curve(model, pointers, heatmaps,
                                        PerturbationOrder::kMostImportantFirst, bad_grid),
               ContractError);
}

PerturbationCurve constant_curve(double value, PerturbationOrder order) {
  PerturbationCurve c;
  c.fractions = default_fraction_grid();
  c.accuracy.assign(c.fractions.size(), value);
  c.order = order;
  return c;
}

TEST(Fidelity, Examples) {
  const auto lif = constant_curve(1.0, PerturbationOrder::kLeastImportantFirst);
  const auto mif = constant_curve(0.5, PerturbationOrder::kMostImportantFirst);
  EXPECT_NEAR(fidelity(mif, lif), 0.5, 1e-12);
  EXPECT_EQ(fidelity(mif, mif), 0.0);
  EXPECT_EQ(fidelity(lif, mif), -fidelity(mif, lif));
  PerturbationCurve other = mif;
  other.fractions.pop_back();
  other.accuracy.pop_back();
  EXPECT_THROW((void)fidelity(other, lif), ContractError);
}

TEST(Fidelity, AntisymmetricOnRandomCurves) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    StreamRng rng(seed, 0);
    auto a = constant_curve(0, PerturbationOrder::kMostImportantFirst);
    auto b = constant_curve(0, PerturbationOrder::kLeastImportantFirst);
    for (std::size_t i = 0; i < a.accuracy.size(); ++i) {
      a.accuracy[i] = rng.uniform();
      b.accuracy[i] = rng.uniform();
    }
    EXPECT_EQ(fidelity(a, b), -fidelity(b, a));
  }
}

TEST(RankNormalized, TiesShareLowestRank) {
  const Image s(1, 5, std::vector<double>{3.0, 1.0, 3.0, 2.0, 5.0});
  EXPECT_EQ(rank_normalized(s), Image(1, 5, std::vector<double>{0.5, 0.0, 0.5, 0.25, 1.0}));
  EXPECT_EQ(rank_normalized(Image(2, 2, 4.0)), Image(2, 2, 0.0));
}

TEST(Roc, PerfectHeatmap) {
  std::vector<Heatmap> maps;
  std::vector<MaskImage> masks;
  for (int i = 0; i < 3; ++i) {
    const MaskImage m = disc_mask(16, 5 + i, 8, 3);
    Image s(16, 16);
    for (std::size_t j = 0; j < s.size(); ++j) s[j] = m[j] ? 1.0 : 0.0;
    maps.push_back(heatmap_of(s));
    masks.push_back(m);
  }
  const RocCurve c = roc_curve_mean(maps, masks);
  ASSERT_EQ(c.thresholds.size(), 101u);
  EXPECT_EQ(c.thresholds.front(), 1.0);
  EXPECT_EQ(c.thresholds.back(), 0.0);
  for (std::size_t t = 1; t + 1 < c.thresholds.size(); ++t) {
    EXPECT_EQ(c.mean_tpr[t], 1.0);
    EXPECT_EQ(c.mean_fpr[t], 0.0);
  }
  const AucResult a = auc(c);
  EXPECT_NEAR(a.mean_tpr, 1.0, 0.011);
  EXPECT_NEAR(a.trapezoidal, 1.0, 1e-12);
}

TEST(Roc, ConstantHeatmapDegenerates) {
  const std::vector<Heatmap> maps{heatmap_of(Image(8, 8, 3.0))};
  const std::vector<MaskImage> masks{disc_mask(8, 3, 3, 2)};
  const RocCurve c = roc_curve_mean(maps, masks);
  for (std::size_t t = 0; t < c.thresholds.size(); ++t) {
    EXPECT_EQ(c.mean_tpr[t], 0.0);
    EXPECT_EQ(c.mean_fpr[t], 0.0);
  }
  EXPECT_NEAR(auc(c).trapezoidal, 0.5, 1e-12);
}

TEST(Roc, MonotoneAndBounded) {
  std::vector<Heatmap> maps;
  std::vector<MaskImage> masks;
  for (std::uint64_t s = 0; s < 10; ++s) {
    maps.push_back(heatmap_of(random_image(16, 16, s)));
    masks.push_back(disc_mask(16, 4 + s % 5, 7, 3));
  }
  const RocCurve c = roc_curve_mean(maps, masks, 51);
  ASSERT_EQ(c.thresholds.size(), 51u);
  for (std::size_t t = 0; t < c.thresholds.size(); ++t) {
    EXPECT_GE(c.mean_tpr[t], 0.0);
    EXPECT_LE(c.mean_tpr[t], 1.0);
    EXPECT_GE(c.mean_fpr[t], 0.0);
    EXPECT_LE(c.mean_fpr[t], 1.0);
    if (t > 0) {  // thresholds descend, so rates must not decrease
      EXPECT_GE(c.mean_tpr[t], c.mean_tpr[t - 1]);
      EXPECT_GE(c.mean_fpr[t], c.mean_fpr[t - 1]);
    }
  }
}

TEST(Roc, RankNormalizationInvariantUnderIncreasingMap) {
  std::vector<Heatmap> maps, shifted;
  std::vector<MaskImage> masks;
  for (std::uint64_t s = 0; s < 6; ++s) {
    maps.push_back(quantized_heatmap(s));
    shifted.push_back(affine(maps.back()));
    masks.push_back(disc_mask(kSide, 3, 3, 2));
  }
  const RocCurve a = roc_curve_mean(maps, masks, 101, RocNormalization::kRank);
  const RocCurve b = roc_curve_mean(shifted, masks, 101, RocNormalization::kRank);
  EXPECT_EQ(a.mean_tpr, b.mean_tpr);
  EXPECT_EQ(a.mean_fpr, b.mean_fpr);
}

TEST(Roc, ExcludesEmptyAndFullMasks) {
  const std::vector<Heatmap> maps{heatmap_of(random_image(8, 8, 1)),
                                  heatmap_of(random_image(8, 8, 2)),
                                  heatmap_of(random_image(8, 8, 3))};
  const std::vector<MaskImage> masks{MaskImage(8, 8, false), disc_mask(8, 3, 3, 2),
                                     MaskImage(8, 8, true)};
  const RocCurve c = roc_curve_mean(maps, masks);
  EXPECT_EQ(c.images_used, 1u);
  EXPECT_EQ(c.excluded, (std::vector<std::size_t>{0, 2}));
  const std::vector<Heatmap> only_bad{maps[0]};
  const std::vector<MaskImage> bad_masks{masks[0]};
  EXPECT_THROW((void)roc_curve_mean(only_bad, bad_masks), ContractError);
  EXPECT_THROW((void)roc_curve_mean(maps, bad_masks), ContractError);
}

// Excluding an image from the ROC mean does not touch perturbation results,
// which use every sample.
TEST_F(PerturbationTest, RocExclusionsDoNotAffectFidelity) {
  const auto before = fidelity(curve(PerturbationOrder::kMostImportantFirst, heatmaps),
                               curve(PerturbationOrder::kLeastImportantFirst, heatmaps));
  samples[0].mask = MaskImage(kSide, kSide, false);
  std::vector<MaskImage> masks;
  for (const auto& s : samples) masks.push_back(s.mask);
  const RocCurve c = roc_curve_mean(heatmaps, masks);
  EXPECT_EQ(c.excluded, std::vector<std::size_t>{0});
  const auto after = fidelity(curve(PerturbationOrder::kMostImportantFirst, heatmaps),
                              curve(PerturbationOrder::kLeastImportantFirst, heatmaps));
  EXPECT_EQ(before, after);
}

TEST(Auc, DiagonalIsOneHalf) {
  RocCurve c;
  for (std::size_t j = 0; j < 101; ++j) {
    const double t = 1.0 - static_cast<double>(j) / 100.0;
    c.thresholds.push_back(t);
    c.mean_tpr.push_back(1.0 - t);
    c.mean_fpr.push_back(1.0 - t);
  }
  const AucResult a = auc(c);
  EXPECT_NEAR(a.trapezoidal, 0.5, 1e-12);
  EXPECT_NEAR(a.mean_tpr, 0.5, 1e-12);
}

TEST(Xrai, WholeImageAndHalves) {
  RegionMap m;
  m.rows = 2;
  m.cols = 4;
  m.labels = {0, 0, 1, 1, 0, 0, 1, 1};
  m.region_count = 2;
  m.sizes = {4, 4};
  const Image scores(2, 4, std::vector<double>{0, 0, 1, 1, 0, 0, 1, 1});
  const RankedRegions r = region_mean_scores(m, scores);
  const MaskImage half = xrai_top_percent(r, m, 50.0);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(half[i], m.labels[i] == 1);
  EXPECT_EQ(xrai_top_percent(r, m, 100.0), MaskImage(2, 4, true));
  EXPECT_THROW((void)xrai_top_percent(r, m, 0.0), ParameterError);
  EXPECT_THROW((void)xrai_top_percent(r, m, 100.5), ParameterError);
}

TEST(Xrai, CoverageBoundsOnRandomRankings) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Image img = random_image(24, 24, seed);
    FelzParams fp;
    fp.k = 200.0;
    fp.min_size = 1 + seed % 30;
    const RegionMap m = felzenszwalb_segment(img, fp);
    const RankedRegions r = region_mean_scores(m, random_image(24, 24, seed + 500));
    const double largest = static_cast<double>(m.largest_region_size()) / 576.0;
    StreamRng rng(seed, 4);
    for (int trial = 0; trial < 10; ++trial) {
      const double p = rng.uniform(0.5, 100.0);
      const double covered = xrai_top_percent(r, m, p).coverage();
      EXPECT_GE(covered, p / 100.0 - 1e-12);
      EXPECT_LT(covered, p / 100.0 + largest);
    }
  }
}

TEST(Dsc, Identities) {
  MaskImage a(4, 4), b(4, 4);
  for (std::size_t i = 0; i < 4; ++i) a.set(i, true);
  for (std::size_t i = 2; i < 6; ++i) b.set(i, true);
  EXPECT_EQ(dsc(a, a), 1.0);
  EXPECT_EQ(dsc(a, b), 0.5);
  EXPECT_EQ(dsc(b, a), 0.5);
  MaskImage c(4, 4);
  for (std::size_t i = 8; i < 12; ++i) c.set(i, true);
  EXPECT_EQ(dsc(a, c), 0.0);
  EXPECT_EQ(dsc(MaskImage(4, 4), MaskImage(4, 4)), 1.0);
  EXPECT_THROW((void)dsc(a, MaskImage(2, 8)), ContractError);
}

TEST(Dsc, SymmetricAndOneOnlyWhenIdentical) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    StreamRng rng(seed, 5);
    MaskImage a(5, 5), b(5, 5);
    for (std::size_t i = 0; i < 25; ++i) {
      a.set(i, rng.uniform() < 0.3);
      b.set(i, rng.uniform() < 0.3);
    }
    if (seed % 3 == 0) b = a;
    EXPECT_EQ(dsc(a, b), dsc(b, a));
    if (a.count() + b.count() > 0) {
      EXPECT_EQ(dsc(a, b) == 1.0, a == b);
    }
  }
}

TEST(DscCurve, MaskHeatmapWithAlignedRegionsPeaks) {
  std::vector<Heatmap> maps;
  std::vector<Image> images;
  std::vector<MaskImage> masks;
  for (int i = 0; i < 4; ++i) {
    MaskImage m = disc_mask(32, 8 + i, 10, 3.5);
    const MaskImage second = disc_mask(32, 20, 22 - i, 2.5);
    for (std::size_t j = 0; j < m.size(); ++j) m.set(j, m[j] || second[j]);
    Image img(32, 32, 0.3);
    Image scores(32, 32, 0.0);
    for (std::size_t j = 0; j < img.size(); ++j) {
      if (m[j]) {
        img[j] = 0.9;
        scores[j] = 1.0;
      }
    }
    images.push_back(img);
    maps.push_back(heatmap_of(scores));
    masks.push_back(m);
  }
  FelzParams fp;
  fp.sigma = 0.0;
  fp.min_size = 5;
  const DscCurve c = dsc_curve(maps, images, masks, fp, default_percent_grid());
  ASSERT_EQ(c.mean_dsc.size(), 11u);
  EXPECT_GE(c.max_dsc, 0.9);
  for (double v : c.mean_dsc) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(c.max_dsc, *std::max_element(c.mean_dsc.begin(), c.mean_dsc.end()));
}

TEST(Csv, RoundTrips) {
  testing::TempDir dir("metrics_csv");
  PerturbationCurve mif = constant_curve(0.0, PerturbationOrder::kMostImportantFirst);
  PerturbationCurve lif = constant_curve(0.0, PerturbationOrder::kLeastImportantFirst);
  for (std::size_t i = 0; i < mif.accuracy.size(); ++i) {
    mif.accuracy[i] = 1.0 / (3.0 + i);
    lif.accuracy[i] = 0.1 * static_cast<double>(i) / 7.0;
  }
  write_perturbation_csv(mif, lif, dir / "f.csv");
  const auto [m2, l2] = read_perturbation_csv(dir / "f.csv");
  EXPECT_EQ(m2.fractions, mif.fractions);
  EXPECT_EQ(m2.accuracy, mif.accuracy);
  EXPECT_EQ(l2.accuracy, lif.accuracy);
  EXPECT_EQ(read_file(dir / "f.csv").substr(0, 24), "fraction,acc_mif,acc_lif");

  std::vector<Heatmap> maps{heatmap_of(random_image(8, 8, 1))};
  std::vector<MaskImage> masks{disc_mask(8, 3, 3, 2)};
  const RocCurve roc = roc_curve_mean(maps, masks);
  write_roc_csv(roc, dir / "r.csv");
  const RocCurve r2 = read_roc_csv(dir / "r.csv");
  EXPECT_EQ(r2.thresholds, roc.thresholds);
  EXPECT_EQ(r2.mean_tpr, roc.mean_tpr);
  EXPECT_EQ(r2.mean_fpr, roc.mean_fpr);

  DscCurve d;
  d.percents = default_percent_grid();
  for (double p : d.percents) d.mean_dsc.push_back(p / 77.0);
  write_dsc_csv(d, dir / "d.csv");
  const DscCurve d2 = read_dsc_csv(dir / "d.csv");
  EXPECT_EQ(d2.percents, d.percents);
  EXPECT_EQ(d2.mean_dsc, d.mean_dsc);
  EXPECT_EQ(d2.max_dsc, 50.0 / 77.0);
  EXPECT_EQ(d2.argmax_percent, 50.0);

  write_file(dir / "bad.csv", "threshold,x\n1,2\n");
  EXPECT_THROW((void)read_roc_csv(dir / "bad.csv"), DecodeError);
  write_file(dir / "bad2.csv", "percent,mean_dsc\n1,abc\n");
  EXPECT_THROW((void)read_dsc_csv(dir / "bad2.csv"), DecodeError);
}

TEST(FormatReal, ShortestRoundTrip) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(1.0), "1");
  const double v = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_real(v)), v);
}

}  // namespace
}  // namespace attrib
