// mop/alignment.hpp

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

// Duration normalization of templates and clips: both sides of a binding
// are brought to a common frame count so that frame i of the action maps to
// frame i of the motion.

#ifndef MOP_ALIGNMENT_HPP_
#define MOP_ALIGNMENT_HPP_

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mop/core.hpp"

namespace mop {

/// Piecewise-linear resampling onto `target_len` uniformly spaced frames
/// spanning the same time interval. Endpoints are copied exactly, and the
/// input is returned unchanged when target_len equals its length.
inline std::vector<Frame> resample(std::span<const Frame> seq,
                                   std::size_t target_len) {
  if (target_len < 2)
    throw DegenerateTarget("resample target length " +
                           std::to_string(target_len) + " < 2");
  const std::size_t n = seq.size();
  if (n < 2)
    throw DegenerateTemplate("resample input has " + std::to_string(n) +
                             " frame(s)");
  if (target_len == n) return {seq.begin(), seq.end()};

  const std::size_t d = seq[0].dims();
  const double t0 = seq.front().t;
  const double t1 = seq.back().t;
  const double last = static_cast<double>(n - 1);
  const double denom = static_cast<double>(target_len - 1);

  std::vector<Frame> out(target_len);
  for (std::size_t k = 0; k < target_len; ++k) {
    if (k == 0) {
      out[k] = seq.front();
      continue;
    }
    if (k + 1 == target_len) {
      out[k] = seq.back();
      continue;
    }
    const double pos = static_cast<double>(k) * last / denom;
    const std::size_t lo = std::min(static_cast<std::size_t>(pos), n - 2);
    const double frac = pos - static_cast<double>(lo);
    Frame &f = out[k];
    f.t = t0 + (t1 - t0) * static_cast<double>(k) / denom;
    f.features.resize(d);
    const auto &a = seq[lo].features;
    const auto &b = seq[lo + 1].features;
    if (a.size() != d || b.size() != d)
      throw DimensionError("resample: ragged input frames");
    for (std::size_t c = 0; c < d; ++c)
      f.features[c] = a[c] + (b[c] - a[c]) * frac;
  }
  return out;
}

namespace detail {
// Rate that keeps (len - 1) / rate constant when the frame count changes.
inline double RescaledRate(double rate, std::size_t from, std::size_t to) {
  if (from == to) return rate;
  return rate * static_cast<double>(to - 1) / static_cast<double>(from - 1);
}
}  // namespace detail

inline ActionTemplate resample(const ActionTemplate &tpl,
                               std::size_t target_len) {
  ActionTemplate out = tpl;
  out.frames = resample(std::span<const Frame>(tpl.frames), target_len);
  out.rate = detail::RescaledRate(tpl.rate, tpl.length(), target_len);
  return out;
}

inline MotionClip resample(const MotionClip &clip, std::size_t target_len) {
  MotionClip out = clip;
  out.frames = resample(std::span<const Frame>(clip.frames), target_len);
  out.rate = detail::RescaledRate(clip.rate, clip.length(), target_len);
  return out;
}

enum class AlignPolicy { kMax, kMin, kFixed };

struct AlignConfig {
  AlignPolicy policy = AlignPolicy::kMax;
  std::size_t fixed_length = 0;  // used by kFixed only
};

inline std::size_t AlignedLength(std::size_t a, std::size_t b,
                                 const AlignConfig &cfg = {}) {
  switch (cfg.policy) {
    case AlignPolicy::kMax: return std::max(a, b);
    case AlignPolicy::kMin: return std::min(a, b);
    case AlignPolicy::kFixed: return cfg.fixed_length;
  }
  return std::max(a, b);
}

/// Brings a template and a clip to a common length (the longer of the two
/// by default), establishing the index-wise mapping x_t <-> y_t.
inline std::pair<ActionTemplate, MotionClip> align_pair(
    const ActionTemplate &x, const MotionClip &y, const AlignConfig &cfg = {}) {
  validate_template(x);
  validate_clip(y);
  const std::size_t len = AlignedLength(x.length(), y.length(), cfg);
  return {resample(x, len), resample(y, len)};
}

}  // namespace mop

#endif  // MOP_ALIGNMENT_HPP_
