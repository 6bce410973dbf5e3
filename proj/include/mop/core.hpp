// mop/core.hpp

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

// Shared domain types of the action follower and the feature arithmetic
// every other module builds on. All values are 64-bit floats; time is in
// seconds.

#ifndef MOP_CORE_HPP_
#define MOP_CORE_HPP_

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mop/errors.hpp"

namespace mop {

/// One timestamped feature vector from a source.
struct Frame {
  double t = 0.0;
  std::vector<double> features;

  std::size_t dims() const { return features.size(); }
  bool operator==(const Frame &) const = default;
};

/// One entry of a source layout: features of `id` occupy `dims` consecutive
/// slots of the concatenated vector.
struct SourceSpec {
  std::string id;
  std::size_t dims = 0;
  bool operator==(const SourceSpec &) const = default;
};

using SourceLayout = std::vector<SourceSpec>;

inline std::size_t LayoutDims(const SourceLayout &layout) {
  std::size_t d = 0;
  for (const auto &s : layout) d += s.dims;
  return d;
}

/// A recorded action, used verbatim as the state sequence of one model.
struct ActionTemplate {
  std::string id;
  std::vector<Frame> frames;
  double rate = 30.0;  // Hz
  SourceLayout layout;
  std::vector<std::string> channel_names;  // optional feature labels

  std::size_t length() const { return frames.size(); }
  std::size_t dims() const { return frames.empty() ? 0 : frames[0].dims(); }
  bool operator==(const ActionTemplate &) const = default;
};

enum class ChannelKind { kJoint, kBlend };

struct Channel {
  std::string name;
  ChannelKind kind = ChannelKind::kJoint;
  bool operator==(const Channel &) const = default;
};

/// A pre-authored character animation. frames[i].features holds one value
/// per channel. Blendshape channels are weights in [0, 1].
struct MotionClip {
  std::string id;
  std::vector<Channel> channels;
  std::vector<Frame> frames;
  double rate = 30.0;

  std::size_t length() const { return frames.size(); }
  bool operator==(const MotionClip &) const = default;
};

enum class PriorMode { kStartState, kUniformFirstWindow };

/// Trained left-to-right model: one state per (aligned) template frame.
/// `feature_offset`/`feature_scale` are empty unless per-source
/// standardization was requested at training time; when present, live
/// frames are mapped through (x - offset) / scale before scoring.
struct FollowerModel {
  std::string id;
  std::vector<std::vector<double>> states;
  double sigma2 = 1.0;
  double a_self = 0.5;
  double a_next = 0.5;
  PriorMode prior_mode = PriorMode::kStartState;
  std::vector<double> prior;
  double rate = 30.0;
  std::size_t half_window = 10;
  std::vector<double> feature_offset;
  std::vector<double> feature_scale;

  std::size_t num_states() const { return states.size(); }
  std::size_t dims() const { return states.empty() ? 0 : states[0].size(); }
  bool standardized() const { return !feature_scale.empty(); }
  bool operator==(const FollowerModel &) const = default;
};

/// Live forward distribution over the active window. State indices are
/// 1-based: alpha[k] is the mass of state window_lo + k.
struct DecoderState {
  std::vector<double> alpha;
  std::size_t window_lo = 1;
  std::size_t window_hi = 1;
  double mu = 1.0;
  double var = 0.0;
  double loglik = 0.0;
  std::size_t step_count = 0;

  double alpha_at(std::size_t state) const {
    if (state < window_lo || state > window_hi) return 0.0;
    return alpha[state - window_lo];
  }
};

struct FollowerOutput {
  std::string model_id;
  double progress_states = 1.0;  // mu
  double progress_seconds = 0.0;
  double loglik_rate = 0.0;
  double var = 0.0;
  bool confident = false;
  bool operator==(const FollowerOutput &) const = default;
};

/// Squared Euclidean distance.
inline double distance2(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("distance2: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + " dimensions");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

inline double distance2(const Frame &a, std::span<const double> b) {
  return distance2(std::span<const double>(a.features), b);
}

inline bool AllFinite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

namespace detail {

inline void ValidateFrames(const std::vector<Frame> &frames,
                           const std::string &what) {
  if (frames.size() < 2) {
    throw DegenerateTemplate(what + " has " + std::to_string(frames.size()) +
                             " frame(s); at least 2 are required");
  }
  const std::size_t d = frames[0].dims();
  if (d == 0) throw DimensionError(what + " has zero-dimensional frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame &f = frames[i];
    if (f.dims() != d) {
      throw DimensionError(what + " frame " + std::to_string(i) + " has " +
                           std::to_string(f.dims()) + " values, expected " +
                           std::to_string(d));
    }
    if (!std::isfinite(f.t) || !AllFinite(f.features))
      throw NonFinite(what + " frame " + std::to_string(i));
    if (f.t < 0.0)
      throw NonMonotoneTime(what + " frame " + std::to_string(i) +
                            " has negative time");
    if (i > 0 && !(f.t > frames[i - 1].t))
      throw NonMonotoneTime(what + " frame " + std::to_string(i));
  }
}

}  // namespace detail

/// Throws DegenerateTemplate, NonFinite, NonMonotoneTime, DimensionError or
/// InvariantError when a template invariant does not hold.
inline void validate_template(const ActionTemplate &tpl) {
  detail::ValidateFrames(tpl.frames, "template '" + tpl.id + "'");
  if (!(tpl.rate > 0.0) || !std::isfinite(tpl.rate))
    throw InvariantError("template '" + tpl.id + "' rate must be positive");
  if (!tpl.layout.empty() && LayoutDims(tpl.layout) != tpl.dims()) {
    throw DimensionError("template '" + tpl.id + "' layout covers " +
                         std::to_string(LayoutDims(tpl.layout)) +
                         " dims, frames have " + std::to_string(tpl.dims()));
  }
  if (!tpl.channel_names.empty() && tpl.channel_names.size() != tpl.dims())
    throw DimensionError("template '" + tpl.id + "' channel names");
}

inline void validate_clip(const MotionClip &clip) {
  detail::ValidateFrames(clip.frames, "clip '" + clip.id + "'");
  if (!(clip.rate > 0.0) || !std::isfinite(clip.rate))
    throw InvariantError("clip '" + clip.id + "' rate must be positive");
  if (clip.channels.size() != clip.frames[0].dims())
    throw DimensionError("clip '" + clip.id + "' channel count");
  for (const Frame &f : clip.frames) {
    for (std::size_t c = 0; c < clip.channels.size(); ++c) {
      if (clip.channels[c].kind == ChannelKind::kBlend &&
          (f.features[c] < 0.0 || f.features[c] > 1.0)) {
        throw InvariantError("clip '" + clip.id + "' blendshape channel '" +
                             clip.channels[c].name + "' outside [0, 1]");
      }
    }
  }
}

/// Throws InvariantError unless every FollowerModel invariant holds.
inline void validate_model(const FollowerModel &m) {
  const auto fail = [&](const std::string &msg) {
    throw InvariantError("model '" + m.id + "': " + msg);
  };
  const std::size_t n = m.num_states();
  if (n < 2) fail("needs at least 2 states");
  const std::size_t d = m.dims();
  if (d == 0) fail("zero-dimensional states");
  for (const auto &s : m.states) {
    if (s.size() != d) fail("ragged state centers");
    if (!AllFinite(s)) fail("non-finite state center");
  }
  if (!(m.sigma2 > 0.0) || !std::isfinite(m.sigma2)) fail("sigma2 must be > 0");
  if (!(m.a_self >= 0.0 && m.a_next >= 0.0) ||
      std::abs(m.a_self + m.a_next - 1.0) > 1e-12)
    fail("a_self + a_next must equal 1");
  if (m.half_window < 1 || m.half_window > n) fail("half window out of [1, N]");
  if (!(m.rate > 0.0) || !std::isfinite(m.rate)) fail("rate must be positive");
  if (m.prior.size() != n) fail("prior size differs from N");
  double total = 0.0;
  for (double p : m.prior) {
    if (!(p >= 0.0)) fail("negative prior mass");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) fail("prior does not sum to 1");
  if (m.feature_offset.size() != m.feature_scale.size() ||
      (!m.feature_scale.empty() && m.feature_scale.size() != d))
    fail("standardization vectors do not match dims");
  for (double s : m.feature_scale)
    if (!(s > 0.0) || !std::isfinite(s)) fail("non-positive feature scale");
  if (!AllFinite(m.feature_offset)) fail("non-finite feature offset");
}

/// Per-dimension affine map x -> (x - offset) / scale. One scale is shared by
/// all dimensions of a source so a source keeps its internal geometry.
struct Standardizer {
  std::vector<double> offset;
  std::vector<double> scale;

  bool empty() const { return scale.empty(); }

  std::vector<double> apply(std::span<const double> x) const {
    if (empty()) return {x.begin(), x.end()};
    if (x.size() != scale.size())
      throw DimensionError("standardizer: frame has " +
                           std::to_string(x.size()) + " dims, expected " +
                           std::to_string(scale.size()));
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
      out[k] = (x[k] - offset[k]) / scale[k];
    return out;
  }

  /// Fits per-source statistics on a template. Sources without a layout
  /// are treated as one block. A constant source gets scale 1.
  static Standardizer Fit(const ActionTemplate &tpl) {
    validate_template(tpl);
    const std::size_t d = tpl.dims();
    SourceLayout layout = tpl.layout;
    if (layout.empty()) layout.push_back({"all", d});
    Standardizer st;
    st.offset.assign(d, 0.0);
    st.scale.assign(d, 1.0);
    const double n = static_cast<double>(tpl.length());
    for (const Frame &f : tpl.frames)
      for (std::size_t k = 0; k < d; ++k) st.offset[k] += f.features[k] / n;
    std::size_t begin = 0;
    for (const auto &src : layout) {
      double ss = 0.0;
      for (const Frame &f : tpl.frames) {
        for (std::size_t k = begin; k < begin + src.dims; ++k) {
          const double c = f.features[k] - st.offset[k];
          ss += c * c;
        }
      }
      const double var = ss / (n * static_cast<double>(src.dims));
      const double s = var > 0.0 ? std::sqrt(var) : 1.0;
      for (std::size_t k = begin; k < begin + src.dims; ++k) st.scale[k] = s;
      begin += src.dims;
    }
    return st;
  }
};

}  // namespace mop

#endif  // MOP_CORE_HPP_
