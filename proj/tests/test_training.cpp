// mop/mop.hpp

// Copyright 2026 The mop Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

namespace mop {
namespace {

using testing::F;
using testing::Tpl;

ActionTemplate Fifty() {
  return testing::Synth(oracle::SynthKind::kLissajous, 50, 3, 5);
}

TEST(TrainModel, OneStatePerFrame) {
  const ActionTemplate t = Fifty();
  const FollowerModel m = train_model(t);
  EXPECT_EQ(m.num_states(), 50u);
  EXPECT_EQ(m.a_self, 0.5);
  EXPECT_EQ(m.a_next, 0.5);
  for (std::size_t i = 0; i < t.length(); ++i)
    EXPECT_EQ(m.states[i], t.frames[i].features);
  EXPECT_EQ(m.rate, t.rate);
  EXPECT_EQ(m.id, t.id);
}

TEST(TrainModel, FixedSigmaPassesThrough) {
  TrainConfig cfg;
  cfg.sigma = FixedSigma{0.5};
  EXPECT_EQ(train_model(Fifty(), cfg).sigma2, 0.5);
}

TEST(TrainModel, TemplateScaledSigmaIsMeanDimensionVariance) {
  const ActionTemplate t = Fifty();
  // Reference by direct summation, two-pass per dimension.
  const double n = static_cast<double>(t.length());
  double v = 0.0;
  for (std::size_t k = 0; k < t.dims(); ++k) {
    double s = 0.0, ss = 0.0;
    for (const auto &f : t.frames) s += f.features[k];
    const double mean = s / n;
    for (const auto &f : t.frames)
      ss += (f.features[k] - mean) * (f.features[k] - mean);
    v += ss / n;
  }
  v /= static_cast<double>(t.dims());
  TrainConfig cfg;
  cfg.sigma = TemplateScaledSigma{1.0};
  EXPECT_NEAR(train_model(t, cfg).sigma2, v, 1e-12 * v);
  cfg.sigma = TemplateScaledSigma{3.0};
  EXPECT_NEAR(train_model(t, cfg).sigma2, 3.0 * v, 3e-12 * v);
}

TEST(TrainModel, StepScaledSigmaIsMeanSuccessiveDistance) {
  const ActionTemplate t = Tpl({{0, 0}, {3, 4}, {3, 5}});
  // Successive squared distances 25 and 1, mean 13.
  EXPECT_DOUBLE_EQ(train_model(t).sigma2, 6.5);  // default factor 0.5
  TrainConfig cfg;
  cfg.sigma = StepScaledSigma{1.0};
  EXPECT_DOUBLE_EQ(train_model(t, cfg).sigma2, 13.0);
}

TEST(TrainModel, Priors) {
  TrainConfig cfg;
  cfg.half_window = 3;
  const FollowerModel a = train_model(Fifty(), cfg);
  EXPECT_EQ(a.prior[0], 1.0);
  for (std::size_t i = 1; i < 50; ++i) EXPECT_EQ(a.prior[i], 0.0);
  cfg.prior = PriorMode::kUniformFirstWindow;
  const FollowerModel b = train_model(Fifty(), cfg);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_DOUBLE_EQ(b.prior[i], 1.0 / 7.0);
  for (std::size_t i = 7; i < 50; ++i) EXPECT_EQ(b.prior[i], 0.0);
}

TEST(TrainModel, ErrorsAndConfigChecks) {
  EXPECT_THROW(train_model(Tpl({{1.0}})), DegenerateTemplate);
  TrainConfig cfg;
  cfg.sigma = FixedSigma{0.0};
  EXPECT_THROW(train_model(Fifty(), cfg), InvariantError);
  cfg.sigma = TemplateScaledSigma{-1.0};
  EXPECT_THROW(train_model(Fifty(), cfg), InvariantError);
  cfg = {};
  cfg.half_window = 0;
  EXPECT_THROW(train_model(Fifty(), cfg), InvariantError);
  cfg = {};
  cfg.sigma = TemplateScaledSigma{1.0};
  EXPECT_THROW(train_model(Tpl({{1.0}, {1.0}}), cfg), InvariantError);
}

TEST(TrainModel, HalfWindowClampedToN) {
  TrainConfig cfg;
  cfg.half_window = 500;
  EXPECT_EQ(train_model(Fifty(), cfg).half_window, 50u);
}

TEST(TrainModel, DeterministicAndValid) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const auto kind = static_cast<oracle::SynthKind>(trial % 3);
    const ActionTemplate t = testing::Synth(kind, 2 + rng() % 120, 1 + rng() % 8, trial);
    TrainConfig cfg;
    cfg.half_window = 1 + rng() % 15;
    cfg.prior = trial % 2 ? PriorMode::kStartState : PriorMode::kUniformFirstWindow;
    cfg.standardize = trial % 4 == 0;
    const FollowerModel a = train_model(t, cfg);
    const FollowerModel b = train_model(t, cfg);
    EXPECT_EQ(a, b);
    EXPECT_NO_THROW(validate_model(a));
  }
}

TEST(Emission, Examples) {
  TrainConfig cfg;
  cfg.sigma = FixedSigma{0.5};
  const FollowerModel m = train_model(Tpl({{0.0}, {1.0}, {2.0}}), cfg);
  EXPECT_EQ(emission_logprob(m, 2, F({1.0})), 0.0);
  EXPECT_EQ(emission_logprob(m, 1, F({1.0})), -1.0);
  EXPECT_EQ(emission_logprob(m, 3, F({1.0})), -1.0);
  EXPECT_THROW(emission_logprob(m, 1, F({1.0, 2.0})), DimensionError);
  EXPECT_THROW(emission_logprob(m, 0, F({1.0})), DimensionError);
  EXPECT_THROW(emission_logprob(m, 4, F({1.0})), DimensionError);

  cfg.sigma = FixedSigma{1e6};
  const FollowerModel flat = train_model(Tpl({{0.0}, {1.0}, {2.0}}), cfg);
  const double e = emission_logprob(flat, 1, F({7.0}));
  EXPECT_LT(e, 0.0);
  EXPECT_GT(e, -1e-4);
}

TEST(Emission, ZeroOnOwnStateAndMonotoneInDistance) {
  const ActionTemplate t = Fifty();
  const FollowerModel m = train_model(t);
  for (std::size_t j = 1; j <= m.num_states(); ++j)
    EXPECT_EQ(emission_logprob(m, j, t.frames[j - 1]), 0.0);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> a(3), b(3);
    for (auto &v : a) v = g(rng);
    for (auto &v : b) v = g(rng);
    const std::size_t j = 1 + rng() % 50;
    const double da = distance2(a, m.states[j - 1]);
    const double db = distance2(b, m.states[j - 1]);
    const double ea = emission_logprob(m, j, F(a));
    const double eb = emission_logprob(m, j, F(b));
    if (da < db) {
      EXPECT_GE(ea, eb);
    } else if (da > db) {
      EXPECT_LE(ea, eb);
    }
    EXPECT_LE(ea, 0.0);
  }
}

TEST(Emission, StandardizedModelScoresRawFrames) {
  ActionTemplate t = Tpl({{0.0, 100.0}, {1.0, 300.0}, {2.0, 500.0}});
  t.layout = {{"a", 1}, {"b", 1}};
  TrainConfig cfg;
  cfg.standardize = true;
  const FollowerModel m = train_model(t, cfg);
  ASSERT_TRUE(m.standardized());
  for (std::size_t j = 1; j <= 3; ++j)
    EXPECT_NEAR(emission_logprob(m, j, t.frames[j - 1]), 0.0, 1e-15);
  // Both sources now live on the same unit scale.
  EXPECT_NEAR(m.states[2][0], m.states[2][1], 1e-12);
}

}  // namespace
}  // namespace mop
