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

// Two gestures drive one character. A noisy performance of the second
// gesture is streamed frame by frame; the rig should settle on it and scrub
// the matching clip forward.

#include <cstdio>
#include <memory>

#include "mop/mop.hpp"

int main() {
  using namespace mop;
  auto gesture = [](const char *id, std::uint64_t seed) {
    oracle::SynthSpec spec;
    spec.kind = oracle::SynthKind::kLissajous;
    spec.frames = 120;
    spec.dims = 4;
    spec.seed = seed;
    spec.id = id;
    return oracle::gen_synthetic(spec);
  };
  const ActionTemplate wave = gesture("wave", 11);
  const ActionTemplate bow = gesture("bow", 23);

  auto clip_for = [](const ActionTemplate &tpl, std::size_t frames) {
    MotionClip clip;
    clip.id = tpl.id + "_clip";
    clip.rate = 30.0;
    clip.channels = {{"arm", ChannelKind::kJoint}, {"smile", ChannelKind::kBlend}};
    for (std::size_t i = 0; i < frames; ++i) {
      const double u = static_cast<double>(i) / static_cast<double>(frames - 1);
      clip.frames.push_back({static_cast<double>(i) / clip.rate, {90.0 * u, u}});
    }
    return clip;
  };

  CharacterRig rig("puppet", ArbitrationConfig{});
  rig.bind(std::make_shared<const FollowerModel>(train_model(wave, {})),
           clip_for(wave, 60));
  rig.bind(std::make_shared<const FollowerModel>(train_model(bow, {})),
           clip_for(bow, 60));

  const double rms = oracle::SignalRms(bow.frames);
  const auto performance = oracle::AddNoise(bow.frames, 0.05 * rms, 5);
  std::size_t on_bow = 0;
  for (std::size_t i = 0; i < performance.size(); ++i) {
    const PuppetCommand cmd = rig.advance(performance[i]);
    if (cmd.active_model_id == "bow") ++on_bow;
    if (i % 20 == 19) {
      std::printf("t=%6.3f  active=%-5s  mu=%7.2f  arm=%6.2f  smile=%5.3f\n",
                  cmd.t, cmd.hold() ? "hold" : cmd.active_model_id->c_str(),
                  cmd.hold() ? 0.0 : cmd.active_output->progress_states,
                  cmd.pose[0], cmd.pose[1]);
    }
  }
  std::printf("bow active on %zu of %zu frames\n", on_bow, performance.size());
  return on_bow * 2 > performance.size() ? 0 : 1;
}
