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
#include <numeric>
#include <string>
#include <vector>

#include "attrib/binary_io.hpp"
#include "attrib/error.hpp"
#include "attrib/estimators.hpp"
#include "attrib/heatmap_io.hpp"
#include "test_support.hpp"

namespace attrib {
namespace {

using testing::linear_model;
using testing::random_image;
using testing::small_conv_model;

constexpr std::size_t kSide = 8;

// Dyadic weights and inputs keep every product and partial sum exact.
std::vector<double> dyadic_weights(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = (static_cast<double>(i % 7) - 3.0) / 8.0;
  return w;
}

Image dyadic_image(std::size_t side) {
  Image img(side, side);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<double>(i % 16) / 16.0;
  return img;
}

std::vector<std::size_t> argsort_desc(const Image& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

TEST(EstimatorParams, Validation) {
  EXPECT_NO_THROW(EstimatorParams{}.validate());
  EstimatorParams p;
  p.steps = 0;
  EXPECT_THROW(p.validate(), ParameterError);
  p = EstimatorParams{};
  p.noise_samples = 0;
  EXPECT_THROW(p.validate(), ParameterError);
  p = EstimatorParams{};
  p.noise_sigma = -0.1;
  EXPECT_THROW(p.validate(), ParameterError);
}

TEST(Registry, NamesRoundTrip) {
  EXPECT_EQ(all_estimators().size(), 8u);
  for (EstimatorKind kind : all_estimators()) {
    EXPECT_EQ(parse_estimator(estimator_id(kind)), kind);
  }
  EXPECT_FALSE(parse_estimator("gradcam").has_value());
  EXPECT_EQ(estimator_display_name(EstimatorKind::kSmoothGradSquared), "SmoothGradSQ");
  EXPECT_TRUE(is_path_method(EstimatorKind::kExpectedGradients));
  EXPECT_FALSE(is_path_method(EstimatorKind::kSmoothGrad));
}

TEST(Backprop, LinearModelGivesTheWeights) {
  const auto w = testing::random_tensor({kSide * kSide}, 3);
  const std::vector<double> weights(w.values().begin(), w.values().end());
  const TrainedModel m = linear_model(kSide, weights, 0.3);
  const Heatmap h1 = backprop_saliency(m, random_image(kSide, kSide, 1), 1);
  const Heatmap h0 = backprop_saliency(m, random_image(kSide, kSide, 1), 0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    EXPECT_EQ(h1.scores[i], weights[i]);
    EXPECT_EQ(h0.scores[i], -weights[i]);
  }
  EXPECT_EQ(h1.estimator, EstimatorKind::kBackprop);
}

TEST(Deconvolution, EqualsBackpropWithoutReluOrPooling) {
  Network net({1, kSide, kSide},
              {LayerSpec::conv2d(2, 3), LayerSpec::conv2d(1, 3), LayerSpec::dense(3),
               LayerSpec::dense(1), LayerSpec::sigmoid()});
  net.initialize(4);
  const TrainedModel m = TrainedModel::from_network(std::move(net));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Image x = random_image(kSide, kSide, s);
    EXPECT_EQ(deconvolution_saliency(m, x, 1).scores, backprop_saliency(m, x, 1).scores);
  }
}

TEST(IntegratedGradients, LinearModelIsExactForDyadicInputs) {
  const auto w = dyadic_weights(kSide * kSide);
  const TrainedModel m = linear_model(kSide, w, 0.25);
  const Image x = dyadic_image(kSide);
  for (std::size_t steps : {1u, 2u, 4u, 8u, 32u}) {
    EstimatorParams p;
    p.steps = steps;
    const Heatmap h = integrated_gradients(m, x, 1, p);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(h.scores[i], w[i] * x[i]);
  }
}

TEST(IntegratedGradients, LinearModelMatchesForAnyStepCount) {
  const auto wt = testing::random_tensor({kSide * kSide}, 9);
  const std::vector<double> w(wt.values().begin(), wt.values().end());
  const TrainedModel m = linear_model(kSide, w);
  const Image x = random_image(kSide, kSide, 10);
  for (std::size_t steps : {1u, 3u, 25u, 300u}) {
    EstimatorParams p;
    p.steps = steps;
    const Heatmap h = integrated_gradients(m, x, 1, p);
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_NEAR(h.scores[i], w[i] * x[i], 1e-12 * std::max(1.0, std::fabs(w[i] * x[i])));
    }
  }
}

TEST(IntegratedGradients, BlackInputGivesZeroMap) {
  const TrainedModel m = small_conv_model(kSide, 1);
  const Heatmap h = integrated_gradients(m, Image(kSide, kSide, 0.0), 1, EstimatorParams{});
  for (double v : h.scores.values()) EXPECT_EQ(v, 0.0);
}

TEST(IntegratedGradients, RejectsZeroStepsAndTrainingSetReference) {
  const TrainedModel m = small_conv_model(kSide, 1);
  EstimatorParams p;
  p.steps = 0;
  EXPECT_THROW((void)integrated_gradients(m, Image(kSide, kSide), 1, p), ParameterError);
  p = EstimatorParams{};
  p.reference = ReferencePolicy::kTrainingSet;
  EXPECT_THROW((void)integrated_gradients(m, Image(kSide, kSide), 1, p), ParameterError);
}

TEST(IntegratedGradients, BlackWhiteAveragesBothReferences) {
  const TrainedModel m = small_conv_model(kSide, 2);
  const Image x = random_image(kSide, kSide, 3);
  EstimatorParams p;
  p.steps = 10;
  p.reference = ReferencePolicy::kBlackAndWhite;
  const Heatmap bw = integrated_gradients(m, x, 1, p);
  const Image black = integrated_gradients_from(m, x, 1, Image(kSide, kSide, 0.0), 10);
  const Image white = integrated_gradients_from(m, x, 1, Image(kSide, kSide, 1.0), 10);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(bw.scores[i], 0.5 * (black[i] + white[i]));
  }
  EXPECT_EQ(bw.estimator, EstimatorKind::kIntegratedGradientsBW);
}

// With a straight path the Riemann sum converges to S(x) - S(x').
TEST(IntegratedGradients, CompletenessOnSmoothNetwork) {
  Network net({1, kSide, kSide}, {LayerSpec::conv2d(2, 3), LayerSpec::sigmoid(),
                                  LayerSpec::dense(3), LayerSpec::sigmoid(),
                                  LayerSpec::dense(1), LayerSpec::sigmoid()});
  net.initialize(8);
  const TrainedModel m = TrainedModel::from_network(std::move(net));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Image x = random_image(kSide, kSide, 100 + s);
    EstimatorParams p;
    p.steps = 300;
    const Heatmap h = integrated_gradients(m, x, 1, p);
    const double total = std::accumulate(h.scores.values().begin(), h.scores.values().end(), 0.0);
    const double expected = predict_logit(m, x) - predict_logit(m, Image(kSide, kSide, 0.0));
    EXPECT_NEAR(total, expected, 0.01 * std::fabs(expected));
  }
}

class ExpectedGradientsTest : public ::testing::Test {
 protected:
  TrainedModel model = small_conv_model(kSide, 5);
  std::vector<Image> pool_images = {random_image(kSide, kSide, 20), random_image(kSide, kSide, 21),
                                    random_image(kSide, kSide, 22), random_image(kSide, kSide, 23),
                                    random_image(kSide, kSide, 24)};
  std::vector<const Image*> pool() const {
    std::vector<const Image*> p;
    for (const Image& img : pool_images) p.push_back(&img);
    return p;
  }
};

TEST_F(ExpectedGradientsTest, InputAsOnlyReferenceGivesZero) {
  const Image x = random_image(kSide, kSide, 7);
  const std::vector<const Image*> self{&x};
  const Heatmap h = expected_gradients(model, x, 1, EstimatorParams{}, self);
  for (double v : h.scores.values()) EXPECT_EQ(v, 0.0);
}

TEST_F(ExpectedGradientsTest, LinearModelWithBlackPoolIsExact) {
  const auto w = dyadic_weights(kSide * kSide);
  const TrainedModel m = linear_model(kSide, w);
  const Image x = dyadic_image(kSide);
  const Image black(kSide, kSide, 0.0);
  const std::vector<const Image*> zero{&black};
  EstimatorParams p;
  p.reference_samples = 16;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    p.seed = seed;
    const Heatmap h = expected_gradients(m, x, 1, p, zero);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(h.scores[i], w[i] * x[i]);
  }
}

TEST_F(ExpectedGradientsTest, EmptyPoolIsParameterError) {
  EXPECT_THROW((void)expected_gradients(model, Image(kSide, kSide), 1, EstimatorParams{}, {}),
               ParameterError);
}

TEST_F(ExpectedGradientsTest, DeterministicGivenSeed) {
  const Image x = random_image(kSide, kSide, 8);
  EstimatorParams p;
  p.seed = 77;
  EXPECT_EQ(expected_gradients(model, x, 1, p, pool()).scores,
            expected_gradients(model, x, 1, p, pool()).scores);
  EstimatorParams q = p;
  q.seed = 78;
  EXPECT_NE(expected_gradients(model, x, 1, q, pool()).scores,
            expected_gradients(model, x, 1, p, pool()).scores);
}

// Monte-Carlo variance of the map's mean across seeds scales as 1/samples:
// 16x more samples should cut it by 16 (accepting 8 to 24). 200 seeds keep
// the sampling error of each variance estimate near 10%.
TEST_F(ExpectedGradientsTest, VarianceShrinksWithSampleCount) {
  const Image x = random_image(kSide, kSide, 9);
  const auto seed_variance = [&](std::size_t samples) {
    std::vector<double> means;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      EstimatorParams p;
      p.reference_samples = samples;
      p.seed = seed;
      const Heatmap h = expected_gradients(model, x, 1, p, pool());
      means.push_back(std::accumulate(h.scores.values().begin(), h.scores.values().end(), 0.0) /
                      static_cast<double>(h.scores.size()));
    }
    const double mu = std::accumulate(means.begin(), means.end(), 0.0) / means.size();
    double var = 0.0;
    for (double m : means) var += (m - mu) * (m - mu);
    return var / static_cast<double>(means.size() - 1);
  };
  const double ratio = seed_variance(25) / seed_variance(400);
  EXPECT_GE(ratio, 8.0);
  EXPECT_LE(ratio, 24.0);
}

TEST(SmoothGrad, ZeroSigmaReducesToBackprop) {
  const TrainedModel m = small_conv_model(kSide, 6);
  const Image x = random_image(kSide, kSide, 11);
  const Image g = backprop_saliency(m, x, 1).scores;
  for (std::size_t n : {1u, 15u, 40u}) {
    EstimatorParams p;
    p.noise_sigma = 0.0;
    p.noise_samples = n;
    const Heatmap plain = smoothgrad(m, x, 1, p, false);
    const Heatmap sq = smoothgrad(m, x, 1, p, true);
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_NEAR(plain.scores[i], g[i], 1e-12);
      EXPECT_NEAR(sq.scores[i], g[i] * g[i], 1e-12);
    }
  }
}

TEST(SmoothGrad, SquaredIsNonnegative) {
  const TrainedModel m = small_conv_model(kSide, 6);
  for (std::uint64_t s = 0; s < 10; ++s) {
    EstimatorParams p;
    p.seed = s;
    const Heatmap h = smoothgrad(m, random_image(kSide, kSide, s), 1, p, true);
    for (double v : h.scores.values()) EXPECT_GE(v, 0.0);
    EXPECT_TRUE(h.scores == smoothgrad(m, random_image(kSide, kSide, s), 1, p, true).scores);
  }
}

TEST(RandomBaseline, DeterministicAndUniform) {
  EXPECT_EQ(random_baseline(64, 64, 5).scores, random_baseline(64, 64, 5).scores);
  EXPECT_NE(random_baseline(64, 64, 5).scores, random_baseline(64, 64, 6).scores);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Heatmap h = random_baseline(64, 64, seed);
    std::vector<double> bins(10, 0.0);
    double sum = 0.0;
    for (double v : h.scores.values()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LT(v, 1.0);
      sum += v;
      bins[static_cast<std::size_t>(v * 10.0)] += 1.0;
    }
    EXPECT_NEAR(sum / 4096.0, 0.5, 0.02);
    const double expected = 409.6;
    double chi2 = 0.0;
    for (double b : bins) chi2 += (b - expected) * (b - expected) / expected;
    EXPECT_LT(chi2, 27.877) << "seed " << seed;  // chi-square(9) at p = 0.001
  }
}

TEST(Postprocess, Examples) {
  Heatmap h{Image(1, 2, std::vector<double>{-2.0, 3.0}), EstimatorKind::kBackprop, "backprop",
            false};
  const Heatmap a = postprocess(h, {false, true, false}, 1);
  EXPECT_EQ(a.scores, Image(1, 2, std::vector<double>{2.0, 3.0}));
  EXPECT_TRUE(a.absolute);
  EXPECT_EQ(a.provenance, "backprop+abs");

  h.scores = Image(1, 2, std::vector<double>{2.0, 4.0});
  EXPECT_EQ(postprocess(h, {false, false, true}, 1).scores,
            Image(1, 2, std::vector<double>{0.0, 1.0}));
  h.scores = Image(2, 2, 7.0);
  EXPECT_EQ(postprocess(h, {false, false, true}, 1).scores, Image(2, 2, 0.0));
}

TEST(Postprocess, SignInversionOnlyForPathMethodsPredictedZero) {
  const Image s(1, 2, std::vector<double>{-1.0, 2.0});
  const Image neg(1, 2, std::vector<double>{1.0, -2.0});
  const PostprocessOps invert{true, false, false};
  for (EstimatorKind kind : all_estimators()) {
    const Heatmap h{s, kind, estimator_id(kind), false};
    EXPECT_EQ(postprocess(h, invert, 1).scores, s);
    EXPECT_EQ(postprocess(h, invert, 0).scores, is_path_method(kind) ? neg : s)
        << estimator_id(kind);
  }
  // Inversion happens before the absolute value, so the pair equals abs.
  const Heatmap ig{s, EstimatorKind::kIntegratedGradients, "intgrad", false};
  EXPECT_EQ(postprocess(ig, {true, true, false}, 0).scores,
            Image(1, 2, std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(postprocess(ig, {true, false, false}, 0).provenance, "intgrad+sign_inverted");
}

TEST(Postprocess, AbsoluteIsIdempotentAndMinmaxInUnitRange) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = testing::random_tensor({16}, seed, -5.0, 5.0);
    const Heatmap h{Image(4, 4, std::vector<double>(t.values().begin(), t.values().end())),
                    EstimatorKind::kSmoothGrad, "smoothgrad", false};
    const Heatmap once = postprocess(h, {false, true, false}, 1);
    EXPECT_EQ(postprocess(once, {false, true, false}, 1).scores, once.scores);
    const Heatmap n = postprocess(h, {false, false, true}, 1);
    const auto [lo, hi] = std::minmax_element(n.scores.values().begin(), n.scores.values().end());
    EXPECT_EQ(*lo, 0.0);
    EXPECT_EQ(*hi, 1.0);
  }
}

// Multiplying the last dense layer by 4 scales the logit seed by 4. Powers of
// two scale every gradient exactly, so each map scales exactly too.
TEST(AllEstimators, RankingInvariantUnderPositiveLogitScaling) {
  const TrainedModel base = small_conv_model(kSide, 12);
  TrainedModel scaled = base;
  Layer& last = scaled.mutable_network().mutable_layers()[scaled.network().layers().size() - 2];
  for (double& w : last.weights.values()) w *= 4.0;
  for (double& b : last.bias.values()) b *= 4.0;
  const Image x = random_image(kSide, kSide, 13);
  const Image ref = random_image(kSide, kSide, 14);
  const std::vector<const Image*> pool{&ref};
  EstimatorParams p;
  p.steps = 5;
  p.noise_samples = 4;
  p.reference_samples = 4;
  for (EstimatorKind kind : all_estimators()) {
    const Heatmap a = compute_heatmap(kind, base, x, 1, p, pool);
    const Heatmap b = compute_heatmap(kind, scaled, x, 1, p, pool);
    EXPECT_EQ(argsort_desc(a.scores), argsort_desc(b.scores)) << estimator_id(kind);
    const double factor = kind == EstimatorKind::kRandom            ? 1.0
                          : kind == EstimatorKind::kSmoothGradSquared ? 16.0
                                                                      : 4.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_EQ(b.scores[i], factor * a.scores[i]) << estimator_id(kind);
    }
  }
}

TEST(AllEstimators, DeterministicFiniteAndShaped) {
  const TrainedModel m = small_conv_model(kSide, 15);
  const Image x = random_image(kSide, kSide, 16);
  const Image ref = random_image(kSide, kSide, 17);
  const std::vector<const Image*> pool{&ref};
  EstimatorParams p;
  p.seed = 3;
  for (EstimatorKind kind : all_estimators()) {
    const Heatmap a = compute_heatmap(kind, m, x, 0, p, pool);
    const Heatmap b = compute_heatmap(kind, m, x, 0, p, pool);
    EXPECT_EQ(a.scores, b.scores) << estimator_id(kind);
    EXPECT_EQ(a.estimator, kind);
    EXPECT_TRUE(a.scores.same_shape(x));
    for (double v : a.scores.values()) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(HeatmapFile, RoundTripAndProvenance) {
  testing::TempDir dir("heatmap_io");
  const TrainedModel m = small_conv_model(kSide, 15);
  const Heatmap h = postprocess(smoothgrad(m, random_image(kSide, kSide, 1), 1, {}, false),
                                {true, true, false}, 0);
  save_heatmap(h, dir / "h.hmp");
  const Heatmap back = load_heatmap(dir / "h.hmp");
  EXPECT_EQ(back.scores, h.scores);
  EXPECT_EQ(back.provenance, h.provenance);
  EXPECT_EQ(back.estimator, EstimatorKind::kSmoothGrad);
  EXPECT_TRUE(back.absolute);
}

TEST(HeatmapFile, DecodeErrors) {
  testing::TempDir dir("heatmap_bad");
  save_heatmap(random_baseline(3, 3, 1), dir / "h.hmp");
  const std::string bytes = read_file(dir / "h.hmp");
  const auto kind_of = [&](const std::string& content) {
    write_file(dir / "x.hmp", content);
    try {
      (void)load_heatmap(dir / "x.hmp");
    } catch (const DecodeError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "decode succeeded";
    return DecodeError::Kind::kMalformed;
  };
  EXPECT_EQ(kind_of("NOTAHEATMAP" + bytes), DecodeError::Kind::kBadMagic);
  EXPECT_EQ(kind_of(bytes.substr(0, bytes.size() - 3)), DecodeError::Kind::kTruncated);
  EXPECT_EQ(kind_of(bytes + "z"), DecodeError::Kind::kMalformed);
  std::string v = bytes;
  v[9] = 42;
  EXPECT_EQ(kind_of(v), DecodeError::Kind::kBadVersion);
}

}  // namespace
}  // namespace attrib
