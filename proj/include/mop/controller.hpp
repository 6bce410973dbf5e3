// mop/controller.hpp

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

// Puppet control: every binding of a rig follows the input with its own
// decoder, one binding is selected as active by hysteresis arbitration on
// the per-frame log-likelihood, and the active binding's clip is scrubbed to
// the follower's progression. Also merges multi-source input and routes
// users to rigs.

#ifndef MOP_CONTROLLER_HPP_
#define MOP_CONTROLLER_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mop/alignment.hpp"
#include "mop/core.hpp"
#include "mop/decoder.hpp"

namespace mop {

using SourceFrame = std::pair<std::string, Frame>;

/// Concatenates per-source frames in layout order. The merged timestamp is
/// the latest part timestamp.
inline Frame merge_sources(std::span<const SourceFrame> parts,
                           const SourceLayout &layout) {
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const std::string &want = layout[i].id;
    if (i < parts.size() && parts[i].first == want) continue;
    const bool present =
        std::any_of(parts.begin(), parts.end(),
                    [&](const SourceFrame &p) { return p.first == want; });
    if (!present) throw MissingSource("source '" + want + "' has no frame");
    throw LayoutMismatch("source '" + want + "' expected at position " +
                         std::to_string(i));
  }
  if (parts.size() != layout.size())
    throw LayoutMismatch("got " + std::to_string(parts.size()) +
                         " sources, layout declares " +
                         std::to_string(layout.size()));
  Frame out;
  out.t = 0.0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Frame &f = parts[i].second;
    if (f.dims() != layout[i].dims)
      throw LayoutMismatch("source '" + layout[i].id + "' has " +
                           std::to_string(f.dims()) + " dims, layout says " +
                           std::to_string(layout[i].dims));
    out.t = i == 0 ? f.t : std::max(out.t, f.t);
    out.features.insert(out.features.end(), f.features.begin(),
                        f.features.end());
  }
  return out;
}

/// Clip pose at progression `s` seconds. Keyframe k (1-based) sits at
/// k / rate, so s = N / rate lands on the last keyframe; values between
/// keyframes are linearly interpolated and s outside the clip clamps.
inline std::vector<double> motion_frame_at(const MotionClip &clip, double s) {
  const std::size_t n = clip.frames.size();
  if (n == 0) return {};
  double pos = s * clip.rate - 1.0;
  pos = std::clamp(pos, 0.0, static_cast<double>(n - 1));
  const std::size_t lo = std::min(static_cast<std::size_t>(pos), n - 1);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= n || frac == 0.0) return clip.frames[lo].features;
  const auto &a = clip.frames[lo].features;
  const auto &b = clip.frames[lo + 1].features;
  std::vector<double> out(a.size());
  for (std::size_t c = 0; c < a.size(); ++c) out[c] = a[c] + (b[c] - a[c]) * frac;
  return out;
}

struct ArbitrationConfig {
  double hysteresis_margin = 2.0;  // nats per frame
  /// Frames the active binding is kept before a confident rival may take
  /// over. Defaults to 2p of the active model.
  std::optional<std::size_t> min_dwell;
  ConfidenceGate gate;
  DecodeOptions decode;
};

struct ArbitrationCandidate {
  double score = 0.0;  // loglik_rate
  bool confident = false;
};

/// Pure selection rule. The best confident candidate (lowest index on ties)
/// replaces the current one when the current is no longer confident, or when
/// it has been held for `min_dwell` frames and beats the current score by
/// strictly more than `margin`.
inline std::optional<std::size_t> arbitrate(
    std::span<const ArbitrationCandidate> cands,
    std::optional<std::size_t> current, std::size_t dwell,
    std::size_t min_dwell, double margin) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (!cands[i].confident) continue;
    if (!best || cands[i].score > cands[*best].score) best = i;
  }
  if (!best) return std::nullopt;
  if (!current || *current >= cands.size() || !cands[*current].confident)
    return best;
  if (*best == *current) return current;
  if (dwell >= min_dwell &&
      cands[*best].score > cands[*current].score + margin)
    return best;
  return current;
}

struct BindingStatus {
  std::string model_id;
  bool tracking = false;  // decoder holds a live distribution
  FollowerOutput output;
  bool operator==(const BindingStatus &) const = default;
};

/// Unit emitted per rig per input frame.
struct PuppetCommand {
  std::string rig_id;
  double t = 0.0;
  std::optional<std::string> active_model_id;  // empty: hold
  std::vector<double> pose;
  std::optional<FollowerOutput> active_output;
  std::vector<BindingStatus> bindings;

  bool hold() const { return !active_model_id.has_value(); }
  bool operator==(const PuppetCommand &) const = default;
};

/// One model paired with one clip on a puppet, plus its live decoder.
struct PuppetBinding {
  std::shared_ptr<const FollowerModel> model;
  std::optional<MotionClip> clip;
  SourceLayout layout;  // sources feeding this binding; empty: whole frame
  Decoder decoder;
  std::size_t frames_since_init = 0;

  PuppetBinding(std::shared_ptr<const FollowerModel> m,
                std::optional<MotionClip> c, SourceLayout l,
                const DecodeOptions &decode, const ConfidenceGate &gate)
      : model(std::move(m)),
        clip(std::move(c)),
        layout(std::move(l)),
        decoder(model, decode, gate) {}
};

class CharacterRig {
 public:
  explicit CharacterRig(std::string id, ArbitrationConfig cfg = {})
      : id_(std::move(id)), cfg_(cfg) {}

  const std::string &id() const { return id_; }
  const ArbitrationConfig &config() const { return cfg_; }
  const std::vector<PuppetBinding> &bindings() const { return bindings_; }
  std::optional<std::size_t> active() const { return active_; }

  /// Adds (or replaces, by model id) a binding. A clip whose length differs
  /// from the model's state count is resampled so frame i of the clip maps
  /// to state i. `gate` overrides the rig's confidence gate for this model.
  void bind(std::shared_ptr<const FollowerModel> model,
            std::optional<MotionClip> clip = std::nullopt,
            SourceLayout layout = {},
            std::optional<ConfidenceGate> gate = std::nullopt) {
    validate_model(*model);
    if (clip) {
      validate_clip(*clip);
      if (clip->length() != model->num_states())
        clip = resample(*clip, model->num_states());
    }
    if (!layout.empty() && LayoutDims(layout) != model->dims())
      throw DimensionError("binding layout of model '" + model->id +
                           "' covers " + std::to_string(LayoutDims(layout)) +
                           " dims, model has " + std::to_string(model->dims()));
    for (auto &b : bindings_) {
      if (b.model->id == model->id) {
        b = PuppetBinding(std::move(model), std::move(clip), std::move(layout),
                          cfg_.decode, gate.value_or(cfg_.gate));
        reset();
        return;
      }
    }
    bindings_.emplace_back(std::move(model), std::move(clip), std::move(layout),
                           cfg_.decode, gate.value_or(cfg_.gate));
  }

  void reset() {
    for (auto &b : bindings_) {
      b.decoder.reset();
      b.frames_since_init = 0;
    }
    active_.reset();
    dwell_ = 0;
    last_pose_.clear();
  }

  /// Every binding consumes `frame` directly.
  PuppetCommand advance(const Frame &frame) {
    for (const auto &b : bindings_) {
      if (frame.dims() != b.model->dims())
        throw DimensionError("rig '" + id_ + "': frame has " +
                             std::to_string(frame.dims()) + " dims, model '" +
                             b.model->id + "' expects " +
                             std::to_string(b.model->dims()));
    }
    return Advance(frame.t,
                   [&](const PuppetBinding &) -> const Frame & { return frame; });
  }

  /// Multi-source input. A binding with a layout takes its sources in layout
  /// order; a binding without one takes the single part, or the
  /// concatenation of all parts when `combined` is set.
  PuppetCommand advance(std::span<const SourceFrame> parts,
                        bool combined = false) {
    std::vector<Frame> inputs;
    inputs.reserve(bindings_.size());
    double t = 0.0;
    for (const auto &p : parts) t = std::max(t, p.second.t);
    for (const auto &b : bindings_) {
      Frame f;
      if (!b.layout.empty()) {
        std::vector<SourceFrame> mine;
        for (const auto &src : b.layout) {
          auto it = std::find_if(parts.begin(), parts.end(),
                                 [&](const SourceFrame &p) {
                                   return p.first == src.id;
                                 });
          if (it == parts.end())
            throw MissingSource("source '" + src.id + "' has no frame");
          mine.push_back(*it);
        }
        f = merge_sources(mine, b.layout);
      } else if (parts.size() == 1) {
        f = parts[0].second;
      } else if (combined) {
        SourceLayout implied;
        for (const auto &p : parts) implied.push_back({p.first, p.second.dims()});
        f = merge_sources(parts, implied);
      } else {
        throw LayoutMismatch("rig '" + id_ + "': binding '" + b.model->id +
                             "' has no layout and several sources are wired");
      }
      if (f.dims() != b.model->dims())
        throw DimensionError("rig '" + id_ + "': input has " +
                             std::to_string(f.dims()) + " dims, model '" +
                             b.model->id + "' expects " +
                             std::to_string(b.model->dims()));
      inputs.push_back(std::move(f));
    }
    std::size_t k = 0;
    return Advance(t, [&](const PuppetBinding &) -> const Frame & {
      return inputs[k++];
    });
  }

 private:
  std::size_t MinDwell(std::size_t binding) const {
    if (cfg_.min_dwell) return *cfg_.min_dwell;
    const auto &dec = bindings_[binding].decoder;
    return 2 * detail::HalfWindow(dec.model(), dec.options());
  }

  // Steps one binding; re-initializes on lost tracking and when an idle,
  // unconfident decoder has had 2p frames to lock on.
  BindingStatus StepBinding(std::size_t idx, const Frame &f) {
    PuppetBinding &b = bindings_[idx];
    const std::size_t reentry =
        2 * detail::HalfWindow(b.decoder.model(), b.decoder.options());
    BindingStatus st;
    st.model_id = b.model->id;
    if (b.decoder.started() && (!active_ || *active_ != idx) &&
        b.frames_since_init >= reentry && !b.decoder.output().confident) {
      b.decoder.reset();
    }
    try {
      st.output = b.decoder.push(f);
      st.tracking = true;
    } catch (const AllZeroMass &) {
      b.decoder.reset();
      b.frames_since_init = 0;
      try {
        st.output = b.decoder.push(f);
        st.tracking = true;
      } catch (const AllZeroMass &) {
        st.output = FollowerOutput{};
        st.output.model_id = b.model->id;
        return st;
      }
    }
    b.frames_since_init = b.decoder.state().step_count;
    return st;
  }

  template <typename InputFor>
  PuppetCommand Advance(double t, InputFor &&input_for) {
    PuppetCommand cmd;
    cmd.rig_id = id_;
    cmd.t = t;
    std::vector<ArbitrationCandidate> cands;
    cands.reserve(bindings_.size());
    for (std::size_t i = 0; i < bindings_.size(); ++i) {
      const Frame &f = input_for(bindings_[i]);
      BindingStatus st = StepBinding(i, f);
      cands.push_back({st.output.loglik_rate, st.tracking && st.output.confident});
      cmd.bindings.push_back(std::move(st));
    }

    const std::size_t min_dwell = active_ ? MinDwell(*active_) : 0;
    const auto next = arbitrate(cands, active_, dwell_, min_dwell,
                                cfg_.hysteresis_margin);
    if (next != active_) {
      dwell_ = 0;
      active_ = next;
    }
    if (active_) {
      ++dwell_;
      const PuppetBinding &b = bindings_[*active_];
      const FollowerOutput &out = cmd.bindings[*active_].output;
      cmd.active_model_id = b.model->id;
      cmd.active_output = out;
      if (b.clip)
        last_pose_ = motion_frame_at(*b.clip, out.progress_states / b.clip->rate);
    }
    cmd.pose = last_pose_;
    return cmd;
  }

  std::string id_;
  ArbitrationConfig cfg_;
  std::vector<PuppetBinding> bindings_;
  std::optional<std::size_t> active_;
  std::size_t dwell_ = 0;
  std::vector<double> last_pose_;
};

/// Which users feed which rigs. A rig listed in `combined` treats all of its
/// users as one concatenated entry, in the order given by rig_users.
struct Wiring {
  std::map<std::string, std::vector<std::string>> user_rigs;
  std::map<std::string, std::vector<std::string>> rig_users;
  std::set<std::string> combined;
};

/// Fans user frames out to rigs. Rigs are advanced in the order given; each
/// wired rig yields exactly one command.
inline std::vector<PuppetCommand> route(std::span<const SourceFrame> users,
                                        std::vector<CharacterRig> &rigs,
                                        const Wiring &wiring) {
  auto find_rig = [&](const std::string &id) {
    return std::find_if(rigs.begin(), rigs.end(),
                        [&](const CharacterRig &r) { return r.id() == id; });
  };
  auto find_user = [&](const std::string &id) {
    return std::find_if(users.begin(), users.end(),
                        [&](const SourceFrame &u) { return u.first == id; });
  };

  std::map<std::string, std::vector<std::string>> inputs = wiring.rig_users;
  for (const auto &[user, rig_ids] : wiring.user_rigs) {
    for (const auto &rig : rig_ids) {
      auto &list = inputs[rig];
      if (std::find(list.begin(), list.end(), user) == list.end())
        list.push_back(user);
    }
  }
  for (const auto &[rig, list] : inputs) {
    if (find_rig(rig) == rigs.end()) throw UnknownId("rig '" + rig + "'");
    for (const auto &u : list)
      if (find_user(u) == users.end()) throw UnknownId("user '" + u + "'");
  }
  for (const auto &rig : wiring.combined)
    if (find_rig(rig) == rigs.end()) throw UnknownId("rig '" + rig + "'");

  std::vector<PuppetCommand> out;
  for (auto &rig : rigs) {
    auto it = inputs.find(rig.id());
    if (it == inputs.end() || it->second.empty()) continue;
    const auto &list = it->second;
    std::vector<SourceFrame> parts;
    parts.reserve(list.size());
    for (const auto &u : list) parts.push_back(*find_user(u));
    const bool plain = parts.size() == 1 &&
                       std::all_of(rig.bindings().begin(), rig.bindings().end(),
                                   [](const PuppetBinding &b) {
                                     return b.layout.empty();
                                   });
    if (plain) {
      out.push_back(rig.advance(parts[0].second));
    } else {
      out.push_back(rig.advance(parts, wiring.combined.count(rig.id()) > 0));
    }
  }
  return out;
}

}  // namespace mop

#endif  // MOP_CONTROLLER_HPP_
