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
#include "attrib/model.hpp"
#include "attrib/rng.hpp"
#include "attrib/synth_data.hpp"
#include "test_support.hpp"

namespace attrib {
namespace {

using testing::TempDir;

ModelConfig tiny_config(std::size_t epochs = 1) {
  ModelConfig c;
  c.layers = {LayerSpec::conv2d(2, 3), LayerSpec::relu(), LayerSpec::maxpool2d(),
              LayerSpec::maxpool2d(), LayerSpec::dense(1), LayerSpec::sigmoid()};
  c.epochs = epochs;
  c.batch_size = 16;
  c.seed = 5;
  return c;
}

const Dataset& small_dataset() {
  static const Dataset d = [] {
    SceneParams p;
    p.seed = 11;
    return generate_dataset(p, 120, 0.5, SplitSpec{0.75, 20});
  }();
  return d;
}

TEST(ModelConfig, DefaultIsValid) { EXPECT_NO_THROW(ModelConfig{}.validate()); }

TEST(ModelConfig, RejectsBadStacksAndHyperparameters) {
  ModelConfig c;
  c.layers = {LayerSpec::conv2d(2, 3), LayerSpec::dense(2), LayerSpec::sigmoid()};
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.layers.pop_back();
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.momentum = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Predict, ZeroLogitGivesHalf) {
  const TrainedModel m = testing::linear_model(4, std::vector<double>(16, 0.0));
  const Image x = testing::random_image(4, 4, 1);
  EXPECT_EQ(predict_logit(m, x), 0.0);
  EXPECT_EQ(predict_prob(m, x), 0.5);
  EXPECT_EQ(predict_class(m, x), 0);  // 0.5 is not above the threshold
}

TEST(Predict, LargeLogitSaturates) {
  const TrainedModel m = testing::linear_model(4, std::vector<double>(16, 0.0), 30.0);
  EXPECT_GT(predict_prob(m, Image(4, 4)), 0.999999);
  EXPECT_EQ(predict_class(m, Image(4, 4)), 1);
}

TEST(Predict, RejectsWrongImageSize) {
  const TrainedModel m = testing::linear_model(4, std::vector<double>(16, 1.0));
  EXPECT_THROW((void)predict_logit(m, Image(5, 4)), ContractError);
  EXPECT_THROW((void)class_score(m, Image(4, 5), 1), ContractError);
}

TEST(ClassScore, ClassesAreNegationsOfEachOther) {
  const TrainedModel m = testing::small_conv_model(8, 3);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image x = testing::random_image(8, 8, s);
    const ClassScore s1 = class_score(m, x, 1);
    const ClassScore s0 = class_score(m, x, 0);
    EXPECT_EQ(s1.value + s0.value, 0.0);
    EXPECT_EQ(s1.value, predict_logit(m, x));
    const Image g1 = class_score_gradient(m, x, 1);
    const Image g0 = class_score_gradient(m, x, 0);
    for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_EQ(g1[i], -g0[i]);
  }
}

TEST(ClassScore, RejectsInvalidClass) {
  const TrainedModel m = testing::small_conv_model(8, 3);
  EXPECT_THROW((void)class_score(m, Image(8, 8), 2), ContractError);
  EXPECT_THROW((void)class_score(m, Image(8, 8), -1), ContractError);
}

// d sigmoid(z)/dx = sigmoid'(z) dz/dx: the probability gradient is the logit
// gradient times one positive per-image factor, so rankings coincide.
TEST(ClassScore, LogitAndProbabilityGradientsAreProportional) {
  const TrainedModel m = testing::small_conv_model(8, 4);
  const Image x = testing::random_image(8, 8, 21);
  const Image g_logit = class_score_gradient(m, x, 1);
  const ForwardResult full = forward(m.network(), x.to_tensor());
  const Tensor g_prob = backward(full.tape, Tensor({1}, 1.0), BackwardMode::kStandard);
  const double z = predict_logit(m, x);
  const double p = 1.0 / (1.0 + std::exp(-z));
  for (std::size_t i = 0; i < g_logit.size(); ++i) {
    EXPECT_NEAR(g_prob[i], p * (1 - p) * g_logit[i], 1e-14);
  }
}

TEST(BalancedAccuracy, MeanOfPerClassAccuracies) {
  const std::vector<int> labels{1, 1, 1, 1, 0, 0};
  const std::vector<int> preds{1, 1, 1, 0, 0, 1};
  EXPECT_DOUBLE_EQ(balanced_accuracy(labels, preds), (0.75 + 0.5) / 2);
  const std::vector<int> balanced{1, 0, 1, 0};
  const std::vector<int> bp{1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(balanced_accuracy(balanced, bp), 0.5);
  const std::vector<int> one_class{1, 1};
  EXPECT_DOUBLE_EQ(balanced_accuracy(one_class, std::vector<int>{1, 0}), 0.5);
}

TEST(Train, RequiresBothClasses) {
  Dataset d = small_dataset();
  for (auto& s : d.samples) s.label = 1;
  EXPECT_THROW((void)train(d, tiny_config()), ValidationError);
}

TEST(Train, RejectsMismatchedImageSize) {
  ModelConfig c = tiny_config();
  c.input_side = 32;
  EXPECT_THROW((void)train(small_dataset(), c), ValidationError);
}

TEST(Train, ZeroEpochsLeavesInitialization) {
  const ModelConfig c = tiny_config(0);
  const TrainedModel m = train(small_dataset(), c);
  Network expected({1, 64, 64}, c.layers);
  expected.initialize(derive_seed(c.seed, "init"));
  EXPECT_TRUE(m.network() == expected);
  const auto held = small_dataset().held_out();
  EXPECT_NEAR(evaluate_balanced_accuracy(m, held), 0.5, 0.1);
}

TEST(Train, SameSeedIsBitIdentical) {
  const TrainedModel a = train(small_dataset(), tiny_config());
  const TrainedModel b = train(small_dataset(), tiny_config());
  EXPECT_TRUE(a == b);
  ModelConfig other = tiny_config();
  other.seed = 6;
  EXPECT_FALSE(train(small_dataset(), other).network() == a.network());
}

TEST(Train, ReportsEpochLosses) {
  std::vector<double> losses;
  const TrainedModel m = train(small_dataset(), tiny_config(3),
                               [&](std::size_t epoch, double loss) {
                                 EXPECT_EQ(epoch, losses.size());
                                 losses.push_back(loss);
                               });
  ASSERT_EQ(losses.size(), 3u);
  EXPECT_EQ(m.metadata().epochs_run, 3u);
  EXPECT_EQ(m.metadata().final_loss, losses.back());
  for (double l : losses) EXPECT_TRUE(std::isfinite(l));
}

TEST(Train, NonFiniteLossNamesTheEpoch) {
  Dataset d = small_dataset();
  d.samples[3].image[100] = std::nan("");
  ModelConfig c = tiny_config(2);
  c.layers = {LayerSpec::dense(1), LayerSpec::sigmoid()};
  try {
    (void)train(d, c);
    FAIL() << "no divergence detected";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 0"), std::string::npos) << e.what();
  }
}

class ModelFile : public ::testing::Test {
 protected:
  TempDir dir{"model_io"};
  TrainedModel model = train(small_dataset(), tiny_config());
};

TEST_F(ModelFile, RoundTripIsBitIdentical) {
  save_model(model, dir / "m.attribmdl");
  const TrainedModel loaded = load_model(dir / "m.attribmdl");
  EXPECT_TRUE(loaded == model);
  const Image x = small_dataset().samples[0].image;
  EXPECT_EQ(predict_logit(loaded, x), predict_logit(model, x));
}

DecodeError::Kind load_error_kind(const std::filesystem::path& path) {
  try {
    (void)load_model(path);
  } catch (const DecodeError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "load succeeded";
  return DecodeError::Kind::kMalformed;
}

TEST_F(ModelFile, DetectsCorruption) {
  save_model(model, dir / "m.attribmdl");
  const std::string bytes = read_file(dir / "m.attribmdl");

  std::string bad = bytes;
  bad[0] = 'X';
  write_file(dir / "magic", bad);
  EXPECT_EQ(load_error_kind(dir / "magic"), DecodeError::Kind::kBadMagic);

  bad = bytes;
  bad[9] = static_cast<char>(99);  // version follows the 9-byte magic
  write_file(dir / "version", bad);
  EXPECT_EQ(load_error_kind(dir / "version"), DecodeError::Kind::kBadVersion);

  write_file(dir / "short", bytes.substr(0, bytes.size() - 5));
  EXPECT_EQ(load_error_kind(dir / "short"), DecodeError::Kind::kTruncated);

  write_file(dir / "magic_only", bytes.substr(0, 4));
  EXPECT_EQ(load_error_kind(dir / "magic_only"), DecodeError::Kind::kTruncated);

  write_file(dir / "trailing", bytes + "xx");
  EXPECT_EQ(load_error_kind(dir / "trailing"), DecodeError::Kind::kMalformed);
}

}  // namespace
}  // namespace attrib
