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

// Small builders shared by the test binaries. Nothing here calls into the
// decoder; reference numbers are computed by the tests themselves.

#ifndef MOP_TESTS_TEST_UTIL_HPP_
#define MOP_TESTS_TEST_UTIL_HPP_

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mop/mop.hpp"

namespace mop::testing {

/// Template from rows of features at `rate`, t = i / rate.
inline ActionTemplate Tpl(std::vector<std::vector<double>> rows,
                          double rate = 30.0, std::string id = "tpl") {
  ActionTemplate t;
  t.id = std::move(id);
  t.rate = rate;
  for (std::size_t i = 0; i < rows.size(); ++i)
    t.frames.push_back({static_cast<double>(i) / rate, std::move(rows[i])});
  return t;
}

inline Frame F(std::vector<double> v, double t = 0.0) { return {t, std::move(v)}; }

inline ActionTemplate Synth(oracle::SynthKind kind, std::size_t frames,
                            std::size_t dims, std::uint64_t seed,
                            double speed = 1.0, std::string id = "synth") {
  oracle::SynthSpec s;
  s.kind = kind;
  s.frames = frames;
  s.dims = dims;
  s.seed = seed;
  s.speed = speed;
  s.id = std::move(id);
  return oracle::gen_synthetic(s);
}

/// Ordinary least-squares slope of y against x.
inline double Slope(const std::vector<double> &x, const std::vector<double> &y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double num = 0, den = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    den += (x[i] - mx) * (x[i] - mx);
  }
  return num / den;
}

inline MotionClip Clip(std::vector<std::vector<double>> rows, double rate = 30.0,
                       std::string id = "clip") {
  MotionClip c;
  c.id = std::move(id);
  c.rate = rate;
  for (std::size_t k = 0; k < rows.at(0).size(); ++k)
    c.channels.push_back({"c" + std::to_string(k), ChannelKind::kJoint});
  for (std::size_t i = 0; i < rows.size(); ++i)
    c.frames.push_back({static_cast<double>(i) / rate, std::move(rows[i])});
  return c;
}

}  // namespace mop::testing

#endif  // MOP_TESTS_TEST_UTIL_HPP_
