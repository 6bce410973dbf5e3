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

#include <limits>
#include <random>

#include "test_util.hpp"

namespace mop {
namespace {

using testing::Tpl;

TEST(Distance2, Examples) {
  const std::vector<double> a{1, 2}, z{0, 0}, b{3, 4}, one{1};
  EXPECT_EQ(distance2(a, a), 0.0);
  EXPECT_EQ(distance2(z, b), 25.0);
  EXPECT_THROW(distance2(one, a), DimensionError);
}

TEST(Distance2, SymmetricNonNegativeZeroIffEqual) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 1 + trial % 7;
    std::vector<double> a(d), b(d);
    for (auto &v : a) v = g(rng);
    for (auto &v : b) v = g(rng);
    const double ab = distance2(a, b);
    EXPECT_EQ(ab, distance2(b, a));
    EXPECT_GT(ab, 0.0);
    EXPECT_EQ(distance2(a, a), 0.0);
    double direct = 0.0;
    for (std::size_t k = 0; k < d; ++k) direct += (a[k] - b[k]) * (a[k] - b[k]);
    EXPECT_EQ(ab, direct);
  }
}

TEST(ValidateTemplate, Examples) {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 50; ++i) rows.push_back({double(i), 1.0});
  EXPECT_NO_THROW(validate_template(Tpl(rows)));
  EXPECT_THROW(validate_template(Tpl({{1.0}})), DegenerateTemplate);
  EXPECT_THROW(
      validate_template(Tpl({{0.0}, {std::numeric_limits<double>::quiet_NaN()}})),
      NonFinite);
}

TEST(ValidateTemplate, TimeAndLayout) {
  ActionTemplate t = Tpl({{0.0}, {1.0}, {2.0}});
  t.frames[2].t = t.frames[1].t;
  EXPECT_THROW(validate_template(t), NonMonotoneTime);
  t = Tpl({{0.0, 1.0}, {1.0, 2.0}});
  t.layout = {{"face", 1}, {"hands", 1}};
  EXPECT_NO_THROW(validate_template(t));
  t.layout = {{"face", 2}, {"hands", 1}};
  EXPECT_THROW(validate_template(t), DimensionError);
  t = Tpl({{0.0, 1.0}, {1.0}});
  EXPECT_THROW(validate_template(t), DimensionError);
}

TEST(ValidateClip, BlendWeightsInUnitInterval) {
  MotionClip c = testing::Clip({{0.0, 0.2}, {1.0, 1.0}});
  c.channels[1].kind = ChannelKind::kBlend;
  EXPECT_NO_THROW(validate_clip(c));
  c.frames[0].features[1] = 1.5;
  EXPECT_THROW(validate_clip(c), InvariantError);
  c.frames[0].features[1] = 0.0;
  c.frames.pop_back();
  EXPECT_THROW(validate_clip(c), DegenerateTemplate);
}

TEST(ValidateModel, RejectsBrokenInvariants) {
  FollowerModel m;
  m.id = "m";
  m.states = {{0.0}, {1.0}, {2.0}};
  m.prior = {1.0, 0.0, 0.0};
  m.half_window = 2;
  EXPECT_NO_THROW(validate_model(m));
  auto broken = [&](auto mutate) {
    FollowerModel b = m;
    mutate(b);
    EXPECT_THROW(validate_model(b), InvariantError);
  };
  broken([](FollowerModel &b) { b.sigma2 = 0.0; });
  broken([](FollowerModel &b) { b.a_self = 0.7; });
  broken([](FollowerModel &b) { b.half_window = 0; });
  broken([](FollowerModel &b) { b.half_window = 4; });
  broken([](FollowerModel &b) { b.prior = {0.5, 0.4, 0.0}; });
  broken([](FollowerModel &b) { b.prior = {1.5, -0.5, 0.0}; });
  broken([](FollowerModel &b) {
    b.states = {{0.0}};
    b.prior = {1.0};
    b.half_window = 1;
  });
}

TEST(Standardizer, SharesOneScalePerSource) {
  ActionTemplate t = Tpl({{0.0, 10.0, 5.0}, {2.0, 14.0, 5.0}});
  t.layout = {{"a", 2}, {"b", 1}};
  const Standardizer st = Standardizer::Fit(t);
  EXPECT_EQ(st.offset, (std::vector<double>{1.0, 12.0, 5.0}));
  // Source a: deviations {1, 2} per frame -> mean square (1 + 4) / 2.
  EXPECT_DOUBLE_EQ(st.scale[0], std::sqrt(2.5));
  EXPECT_DOUBLE_EQ(st.scale[1], std::sqrt(2.5));
  EXPECT_EQ(st.scale[2], 1.0);  // constant source
  const auto y = st.apply(std::vector<double>{1.0, 12.0, 6.0});
  EXPECT_EQ(y, (std::vector<double>{0.0, 0.0, 1.0}));
}

TEST(Errors, CodesAndNames) {
  EXPECT_EQ(AllZeroMass("x").code(), ErrorCode::kAllZeroMass);
  EXPECT_EQ(ParseError(3, 2, "bad").line(), 3u);
  EXPECT_EQ(ParseError(3, 2, "bad").field(), 2u);
  EXPECT_NE(std::string(ParseError(3, 2, "bad").what()).find("line 3"),
            std::string::npos);
  EXPECT_EQ(ErrorCodeName(ErrorCode::kDimension), "DimensionError");
}

}  // namespace
}  // namespace mop
