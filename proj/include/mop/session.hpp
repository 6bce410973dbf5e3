// mop/session.hpp

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

// The "mop/1" session protocol: one JSON object per line in each direction.
// A session walks the capture -> train -> perform -> evaluate loop; every
// message is answered synchronously with zero or more events, and no event
// carries wall-clock data, so a transcript replays byte for byte.
// docs/protocol.md lists every message and event.

#ifndef MOP_SESSION_HPP_
#define MOP_SESSION_HPP_

#include <algorithm>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mop/controller.hpp"
#include "mop/core.hpp"
#include "mop/decoder.hpp"
#include "mop/training.hpp"

namespace mop::service {

inline constexpr std::string_view kProtocolVersion = "mop/1";

using Json = nlohmann::ordered_json;

/// Trained model plus what the service needs to drive it live.
struct ModelEntry {
  std::shared_ptr<const FollowerModel> model;
  SourceLayout layout;
  ConfidenceGate gate;
};

/// Assets shared by every session: captured templates, trained models and
/// motion clips. Readers run concurrently; writers are exclusive.
class AssetRegistry {
 public:
  void put_template(ActionTemplate tpl) {
    std::unique_lock lock(mu_);
    const std::string id = tpl.id;
    templates_.insert_or_assign(id, std::move(tpl));
  }
  void put_model(ModelEntry entry) {
    std::unique_lock lock(mu_);
    const std::string id = entry.model->id;
    models_.insert_or_assign(id, std::move(entry));
  }
  void put_clip(MotionClip clip) {
    validate_clip(clip);
    std::unique_lock lock(mu_);
    const std::string id = clip.id;
    clips_.insert_or_assign(id, std::move(clip));
  }

  std::optional<ActionTemplate> get_template(const std::string &id) const {
    std::shared_lock lock(mu_);
    auto it = templates_.find(id);
    if (it == templates_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<ModelEntry> get_model(const std::string &id) const {
    std::shared_lock lock(mu_);
    auto it = models_.find(id);
    if (it == models_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<MotionClip> get_clip(const std::string &id) const {
    std::shared_lock lock(mu_);
    auto it = clips_.find(id);
    if (it == clips_.end()) return std::nullopt;
    return it->second;
  }

  Json list() const {
    std::shared_lock lock(mu_);
    Json templates = Json::array(), models = Json::array(),
         clips = Json::array();
    for (const auto &[id, t] : templates_)
      templates.push_back({{"id", id}, {"frames", t.length()}, {"d", t.dims()}});
    for (const auto &[id, m] : models_)
      models.push_back({{"id", id},
                        {"N", m.model->num_states()},
                        {"d", m.model->dims()},
                        {"sigma2", m.model->sigma2}});
    for (const auto &[id, c] : clips_)
      clips.push_back(
          {{"id", id}, {"frames", c.length()}, {"channels", c.channels.size()}});
    return Json{{"templates", templates}, {"models", models}, {"clips", clips}};
  }

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, ActionTemplate> templates_;
  std::map<std::string, ModelEntry> models_;
  std::map<std::string, MotionClip> clips_;
};

enum class Phase { kIdle, kCapturing, kPerforming };

/// Protocol-level failure reported as an error event.
struct ProtocolError {
  std::string code;
  std::string message;
};

inline std::string ErrorCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimension:
    case ErrorCode::kLayoutMismatch: return "dimension_mismatch";
    case ErrorCode::kDegenerateTemplate: return "degenerate_template";
    case ErrorCode::kUnknownId: return "unknown_asset";
    case ErrorCode::kMissingSource: return "missing_source";
    case ErrorCode::kAllZeroMass: return "lost_tracking";
    case ErrorCode::kParse:
    case ErrorCode::kVersion: return "bad_message";
    default: return "invalid";
  }
}

/// Parses the `config` object of a train message.
inline TrainConfig ParseTrainConfig(const Json &cfg) {
  TrainConfig out;
  if (cfg.is_null()) return out;
  if (!cfg.is_object()) throw ProtocolError{"bad_message", "config must be an object"};
  if (cfg.contains("sigma")) {
    const Json &s = cfg.at("sigma");
    const std::string mode = s.value("mode", "step_scaled");
    if (mode == "fixed") {
      out.sigma = FixedSigma{s.at("value").get<double>()};
    } else if (mode == "template_scaled") {
      out.sigma = TemplateScaledSigma{s.value("factor", 1.0)};
    } else if (mode == "step_scaled") {
      out.sigma = StepScaledSigma{s.value("factor", kDefaultStepFactor)};
    } else {
      throw ProtocolError{"bad_message", "unknown sigma mode '" + mode + "'"};
    }
  }
  if (cfg.contains("prior")) {
    const std::string p = cfg.at("prior").get<std::string>();
    if (p == "start_state") {
      out.prior = PriorMode::kStartState;
    } else if (p == "uniform_first_window") {
      out.prior = PriorMode::kUniformFirstWindow;
    } else {
      throw ProtocolError{"bad_message", "unknown prior '" + p + "'"};
    }
  }
  out.half_window = cfg.value("window", out.half_window);
  out.loglik_floor = cfg.value("loglik_floor", out.loglik_floor);
  out.var_threshold = cfg.value("var_threshold", out.var_threshold);
  out.standardize = cfg.value("standardize", out.standardize);
  return out;
}

/// One client conversation. Not thread-safe: a session is driven by exactly
/// one lane; distinct sessions may run in parallel over a shared registry.
class Session {
 public:
  explicit Session(std::shared_ptr<AssetRegistry> registry,
                   ArbitrationConfig arbitration = {})
      : registry_(std::move(registry)), arbitration_(arbitration) {}

  Phase phase() const { return phase_; }

  /// Handles one message line and returns the event lines it produces.
  std::vector<std::string> handle_line(std::string_view line) {
    std::vector<std::string> out;
    for (const Json &ev : handle_text(line)) out.push_back(ev.dump());
    return out;
  }

  std::vector<Json> handle_text(std::string_view line) {
    ++seq_;
    Json msg;
    try {
      msg = Json::parse(line.begin(), line.end());
    } catch (const Json::exception &e) {
      return {ErrorEvent(Json(seq_), "bad_message", "malformed JSON")};
    }
    return Dispatch(msg);
  }

  std::vector<Json> handle(const Json &msg) {
    ++seq_;
    return Dispatch(msg);
  }

 private:
  struct BindSpec {
    std::string model_id;
    std::optional<std::string> clip_id;
  };

  static Json ErrorEvent(const Json &ref, const std::string &code,
                         const std::string &message) {
    return Json{{"type", "error"}, {"ref", ref}, {"code", code},
                {"message", message}};
  }
  static Json Ack(const Json &ref) { return Json{{"type", "ack"}, {"ref", ref}}; }

  std::vector<Json> Dispatch(const Json &msg) {
    const Json ref = msg.is_object() && msg.contains("ref") ? msg.at("ref")
                                                            : Json(seq_);
    try {
      if (!msg.is_object() || !msg.contains("type") ||
          !msg.at("type").is_string())
        throw ProtocolError{"bad_message", "message needs a string 'type'"};
      const std::string type = msg.at("type").get<std::string>();
      if (type == "hello") return Hello(msg, ref);
      if (!greeted_)
        throw ProtocolError{"phase_violation", "expected hello first"};
      if (type == "begin_capture") return BeginCapture(msg, ref);
      if (type == "frame") return OnFrame(msg, ref);
      if (type == "end_capture") return EndCapture(ref);
      if (type == "train") return Train(msg, ref);
      if (type == "bind") return Bind(msg, ref);
      if (type == "start_perform") return StartPerform(msg, ref);
      if (type == "stop_perform") return StopPerform(ref);
      if (type == "set_window") return SetWindow(msg, ref);
      if (type == "list_assets") return ListAssets(ref);
      throw ProtocolError{"bad_message", "unknown message type '" + type + "'"};
    } catch (const ProtocolError &e) {
      return {ErrorEvent(ref, e.code, e.message)};
    } catch (const Error &e) {
      return {ErrorEvent(ref, ErrorCodeFor(e.code()), e.what())};
    } catch (const Json::exception &e) {
      return {ErrorEvent(ref, "bad_message", e.what())};
    }
  }

  void RequirePhase(Phase want, const char *what) const {
    if (phase_ != want)
      throw ProtocolError{"phase_violation",
                          std::string(what) + " not allowed in phase " +
                              PhaseName(phase_)};
  }

  static const char *PhaseName(Phase p) {
    switch (p) {
      case Phase::kIdle: return "idle";
      case Phase::kCapturing: return "capturing";
      case Phase::kPerforming: return "performing";
    }
    return "?";
  }

  std::vector<Json> Hello(const Json &msg, const Json &ref) {
    const std::string v = msg.value("protocol_version", "");
    if (v != kProtocolVersion)
      throw ProtocolError{"protocol_mismatch",
                          "service speaks " + std::string(kProtocolVersion)};
    greeted_ = true;
    return {Ack(ref)};
  }

  static SourceLayout ParseLayout(const Json &msg, std::size_t d) {
    SourceLayout layout;
    if (msg.contains("source_layout") && !msg.at("source_layout").is_null()) {
      for (const Json &s : msg.at("source_layout"))
        layout.push_back({s.at("id").get<std::string>(),
                          s.at("dims").get<std::size_t>()});
    } else {
      layout.push_back({"default", d});
    }
    if (LayoutDims(layout) != d)
      throw DimensionError("source_layout covers " +
                           std::to_string(LayoutDims(layout)) +
                           " dims, d = " + std::to_string(d));
    return layout;
  }

  std::vector<Json> BeginCapture(const Json &msg, const Json &ref) {
    RequirePhase(Phase::kIdle, "begin_capture");
    const std::size_t d = msg.at("d").get<std::size_t>();
    if (d == 0) throw DimensionError("d must be >= 1");
    capture_ = ActionTemplate{};
    capture_.id = msg.at("template_id").get<std::string>();
    capture_.rate = msg.at("rate").get<double>();
    if (!(capture_.rate > 0.0)) throw InvariantError("rate must be positive");
    capture_.layout = ParseLayout(msg, d);
    pending_.clear();
    phase_ = Phase::kCapturing;
    return {Ack(ref)};
  }

  // Collects one source's frame into the current tick. Returns the parts in
  // `order` once every source in it has arrived.
  std::optional<std::vector<SourceFrame>> Collect(const Json &msg,
                                                  const SourceLayout &order) {
    std::string source;
    if (msg.contains("source_id") && !msg.at("source_id").is_null()) {
      source = msg.at("source_id").get<std::string>();
    } else if (order.size() == 1) {
      source = order[0].id;
    } else {
      throw MissingSource("frame without source_id on a multi-source entry");
    }
    auto spec = std::find_if(order.begin(), order.end(),
                             [&](const SourceSpec &s) { return s.id == source; });
    if (spec == order.end())
      throw UnknownId("source '" + source + "' is not part of this entry");
    Frame f;
    f.t = msg.at("t").get<double>();
    f.features = msg.at("values").get<std::vector<double>>();
    if (f.dims() != spec->dims)
      throw DimensionError("source '" + source + "' sent " +
                           std::to_string(f.dims()) + " values, expected " +
                           std::to_string(spec->dims));
    if (!std::isfinite(f.t) || !AllFinite(f.features))
      throw NonFinite("frame values must be finite");
    if (pending_.count(source))
      throw LayoutMismatch("source '" + source +
                           "' sent twice before the tick completed");
    pending_.emplace(source, std::move(f));
    if (pending_.size() < order.size()) return std::nullopt;
    std::vector<SourceFrame> parts;
    for (const auto &s : order) parts.emplace_back(s.id, pending_.at(s.id));
    pending_.clear();
    return parts;
  }

  std::vector<Json> OnFrame(const Json &msg, const Json &ref) {
    if (phase_ == Phase::kCapturing) {
      auto parts = Collect(msg, capture_.layout);
      if (parts) {
        Frame merged = merge_sources(*parts, capture_.layout);
        if (!capture_.frames.empty() && !(merged.t > capture_.frames.back().t))
          throw NonMonotoneTime("frame time must increase");
        capture_.frames.push_back(std::move(merged));
      }
      return {};
    }
    if (phase_ == Phase::kPerforming) {
      auto parts = Collect(msg, perform_sources_);
      if (!parts) return {};
      std::vector<Json> events;
      for (auto &rig : rigs_) {
        PuppetCommand cmd = rig.advance(*parts, /*combined=*/true);
        events.push_back(OutputEvent(cmd));
      }
      return events;
    }
    (void)ref;
    throw ProtocolError{"phase_violation", "frame not allowed in phase idle"};
  }

  std::vector<Json> EndCapture(const Json &ref) {
    RequirePhase(Phase::kCapturing, "end_capture");
    phase_ = Phase::kIdle;
    pending_.clear();
    ActionTemplate tpl = std::move(capture_);
    capture_ = ActionTemplate{};
    validate_template(tpl);
    registry_->put_template(std::move(tpl));
    return {Ack(ref)};
  }

  std::vector<Json> Train(const Json &msg, const Json &ref) {
    RequirePhase(Phase::kIdle, "train");
    const std::string id = msg.at("template_id").get<std::string>();
    auto tpl = registry_->get_template(id);
    if (!tpl) throw ProtocolError{"unknown_asset", "template '" + id + "'"};
    const TrainConfig cfg =
        ParseTrainConfig(msg.contains("config") ? msg.at("config") : Json());
    auto model = std::make_shared<const FollowerModel>(train_model(*tpl, cfg));
    const std::size_t n = model->num_states();
    const double sigma2 = model->sigma2;
    registry_->put_model(
        ModelEntry{model, tpl->layout, ConfidenceGate::From(cfg)});
    return {Json{{"type", "trained"},
                 {"ref", ref},
                 {"model_id", id},
                 {"N", n},
                 {"sigma2", sigma2}}};
  }

  std::vector<Json> Bind(const Json &msg, const Json &ref) {
    RequirePhase(Phase::kIdle, "bind");
    const std::string rig = msg.at("rig_id").get<std::string>();
    BindSpec spec;
    spec.model_id = msg.at("model_id").get<std::string>();
    if (!registry_->get_model(spec.model_id))
      throw ProtocolError{"unknown_asset", "model '" + spec.model_id + "'"};
    if (msg.contains("clip_id") && !msg.at("clip_id").is_null()) {
      spec.clip_id = msg.at("clip_id").get<std::string>();
      if (!registry_->get_clip(*spec.clip_id))
        throw ProtocolError{"unknown_asset", "clip '" + *spec.clip_id + "'"};
    }
    auto &list = bindings_[rig];
    auto it = std::find_if(list.begin(), list.end(), [&](const BindSpec &b) {
      return b.model_id == spec.model_id;
    });
    if (it != list.end()) {
      *it = spec;
    } else {
      list.push_back(spec);
    }
    return {Ack(ref)};
  }

  std::vector<Json> StartPerform(const Json &msg, const Json &ref) {
    RequirePhase(Phase::kIdle, "start_perform");
    std::vector<std::string> ids;
    if (msg.contains("rig_ids")) {
      ids = msg.at("rig_ids").get<std::vector<std::string>>();
    } else {
      for (const auto &[id, _] : bindings_) ids.push_back(id);
    }
    if (ids.empty()) throw ProtocolError{"unknown_asset", "no rigs to perform"};

    ArbitrationConfig arb = arbitration_;
    if (window_) arb.decode.half_window = window_;
    std::vector<CharacterRig> rigs;
    SourceLayout sources;
    for (const auto &rig_id : ids) {
      auto it = bindings_.find(rig_id);
      if (it == bindings_.end())
        throw ProtocolError{"unknown_asset", "rig '" + rig_id + "'"};
      CharacterRig rig(rig_id, arb);
      for (const auto &b : it->second) {
        auto entry = registry_->get_model(b.model_id);
        if (!entry)
          throw ProtocolError{"unknown_asset", "model '" + b.model_id + "'"};
        std::optional<MotionClip> clip;
        if (b.clip_id) {
          clip = registry_->get_clip(*b.clip_id);
          if (!clip)
            throw ProtocolError{"unknown_asset", "clip '" + *b.clip_id + "'"};
        }
        for (const auto &src : entry->layout) {
          auto known = std::find_if(
              sources.begin(), sources.end(),
              [&](const SourceSpec &s) { return s.id == src.id; });
          if (known == sources.end()) {
            sources.push_back(src);
          } else if (known->dims != src.dims) {
            throw DimensionError("source '" + src.id +
                                 "' has conflicting dimensions across models");
          }
        }
        rig.bind(entry->model, std::move(clip), entry->layout, entry->gate);
      }
      rigs.push_back(std::move(rig));
    }
    rigs_ = std::move(rigs);
    perform_sources_ = std::move(sources);
    pending_.clear();
    phase_ = Phase::kPerforming;
    return {Ack(ref)};
  }

  std::vector<Json> StopPerform(const Json &ref) {
    RequirePhase(Phase::kPerforming, "stop_perform");
    rigs_.clear();
    perform_sources_.clear();
    pending_.clear();
    phase_ = Phase::kIdle;
    return {Ack(ref)};
  }

  std::vector<Json> SetWindow(const Json &msg, const Json &ref) {
    const std::size_t p = msg.at("p").get<std::size_t>();
    if (p < 1) throw InvariantError("window half width must be >= 1");
    window_ = p;
    return {Ack(ref)};
  }

  std::vector<Json> ListAssets(const Json &ref) {
    Json ev{{"type", "assets"}, {"ref", ref}};
    const Json assets = registry_->list();
    for (const auto &[k, v] : assets.items()) ev[k] = v;
    return {ev};
  }

  static Json OutputEvent(const PuppetCommand &cmd) {
    Json ev{{"type", "output"}, {"rig_id", cmd.rig_id}, {"t", cmd.t}};
    if (cmd.active_output) {
      const FollowerOutput &o = *cmd.active_output;
      ev["active_model_id"] = *cmd.active_model_id;
      ev["hold"] = false;
      ev["mu"] = o.progress_states;
      ev["progress_seconds"] = o.progress_seconds;
      ev["loglik_rate"] = o.loglik_rate;
      ev["var"] = o.var;
    } else {
      ev["active_model_id"] = nullptr;
      ev["hold"] = true;
      ev["mu"] = nullptr;
      ev["progress_seconds"] = nullptr;
      ev["loglik_rate"] = nullptr;
      ev["var"] = nullptr;
    }
    ev["pose"] = cmd.pose;
    Json bindings = Json::array();
    for (const auto &b : cmd.bindings) {
      Json jb{{"model_id", b.model_id}, {"tracking", b.tracking}};
      if (b.tracking) {
        jb["mu"] = b.output.progress_states;
        jb["loglik_rate"] = b.output.loglik_rate;
        jb["var"] = b.output.var;
      }
      jb["confident"] = b.output.confident;
      bindings.push_back(std::move(jb));
    }
    ev["bindings"] = std::move(bindings);
    return ev;
  }

  std::shared_ptr<AssetRegistry> registry_;
  ArbitrationConfig arbitration_;
  Phase phase_ = Phase::kIdle;
  bool greeted_ = false;
  std::size_t seq_ = 0;
  ActionTemplate capture_;
  std::map<std::string, Frame> pending_;
  std::map<std::string, std::vector<BindSpec>> bindings_;
  std::vector<CharacterRig> rigs_;
  SourceLayout perform_sources_;
  std::optional<std::size_t> window_;
};

}  // namespace mop::service

#endif  // MOP_SESSION_HPP_
