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

#include <sys/socket.h>
#include <unistd.h>

#include <sstream>
#include <thread>

#include "mop/http_bridge.hpp"
#include "test_util.hpp"

namespace mop::service {
namespace {

using testing::Synth;

Json Msg(std::string type, Json body = Json::object()) {
  Json m{{"type", std::move(type)}};
  for (auto &[k, v] : body.items()) m[k] = v;
  return m;
}

struct Driver {
  std::shared_ptr<AssetRegistry> registry = std::make_shared<AssetRegistry>();
  Session session{registry};
  std::vector<std::string> transcript;

  std::vector<Json> Send(const Json &msg) {
    std::vector<Json> out;
    for (const auto &line : session.handle_line(msg.dump())) {
      transcript.push_back(line);
      out.push_back(Json::parse(line));
    }
    return out;
  }
  Json One(const Json &msg) {
    auto ev = Send(msg);
    EXPECT_EQ(ev.size(), 1u) << msg.dump();
    return ev.empty() ? Json() : ev[0];
  }
  void Hello() { ASSERT_EQ(One(Msg("hello", {{"protocol_version", "mop/1"}}))["type"], "ack"); }

  void Capture(const ActionTemplate &t) {
    ASSERT_EQ(One(Msg("begin_capture", {{"template_id", t.id},
                                         {"rate", t.rate},
                                         {"d", t.dims()}}))["type"],
              "ack");
    for (const auto &f : t.frames)
      ASSERT_TRUE(Send(Msg("frame", {{"t", f.t}, {"values", f.features}})).empty());
    ASSERT_EQ(One(Msg("end_capture"))["type"], "ack");
  }
};

bool IsError(const Json &ev, const std::string &code) {
  return ev.value("type", "") == "error" && ev.value("code", "") == code;
}

TEST(Session, HelloRequiredAndVersionChecked) {
  Driver d;
  EXPECT_TRUE(IsError(d.One(Msg("list_assets")), "phase_violation"));
  EXPECT_TRUE(IsError(d.One(Msg("hello", {{"protocol_version", "mop/9"}})),
                      "protocol_mismatch"));
  EXPECT_TRUE(IsError(d.One(Msg("hello")), "protocol_mismatch"));
  const Json ack = d.One(Msg("hello", {{"protocol_version", "mop/1"}, {"ref", "h1"}}));
  EXPECT_EQ(ack, (Json{{"type", "ack"}, {"ref", "h1"}}));
}

TEST(Session, MalformedMessages) {
  Driver d;
  d.Hello();
  auto ev = d.session.handle_line("{not json");
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_TRUE(IsError(Json::parse(ev[0]), "bad_message"));
  EXPECT_TRUE(IsError(d.One(Json::array()), "bad_message"));
  EXPECT_TRUE(IsError(d.One(Msg("dance")), "bad_message"));
  EXPECT_TRUE(IsError(d.One(Msg("begin_capture", {{"rate", 30}})), "bad_message"));
}

TEST(Session, CaptureThenTrain) {
  Driver d;
  d.Hello();
  d.Capture(Synth(oracle::SynthKind::kLissajous, 50, 2, 3, 1.0, "wave"));
  const Json ev = d.One(Msg("train", {{"template_id", "wave"}, {"ref", 7}}));
  EXPECT_EQ(ev["type"], "trained");
  EXPECT_EQ(ev["ref"], 7);
  EXPECT_EQ(ev["model_id"], "wave");
  EXPECT_EQ(ev["N"], 50);
  EXPECT_GT(ev["sigma2"].get<double>(), 0.0);

  const Json fixed = d.One(Msg(
      "train", {{"template_id", "wave"},
                {"config", {{"sigma", {{"mode", "fixed"}, {"value", 0.5}}}, {"window", 4}}}}));
  EXPECT_EQ(fixed["sigma2"], 0.5);
  EXPECT_EQ(d.registry->get_model("wave")->model->half_window, 4u);

  const Json assets = d.One(Msg("list_assets"));
  EXPECT_EQ(assets["type"], "assets");
  EXPECT_EQ(assets["templates"][0]["frames"], 50);
  EXPECT_EQ(assets["models"][0]["N"], 50);
}

TEST(Session, PhaseViolations) {
  Driver d;
  d.Hello();
  EXPECT_TRUE(IsError(d.One(Msg("frame", {{"t", 0}, {"values", {1, 2}}})), "phase_violation"));
  EXPECT_TRUE(IsError(d.One(Msg("end_capture")), "phase_violation"));
  EXPECT_TRUE(IsError(d.One(Msg("stop_perform")), "phase_violation"));
  d.One(Msg("begin_capture", {{"template_id", "x"}, {"rate", 30}, {"d", 2}}));
  EXPECT_TRUE(IsError(d.One(Msg("train", {{"template_id", "x"}})), "phase_violation"));
  EXPECT_TRUE(IsError(d.One(Msg("begin_capture", {{"template_id", "y"}, {"rate", 30}, {"d", 2}})),
                      "phase_violation"));
}

TEST(Session, CaptureRejectsBadFrames) {
  Driver d;
  d.Hello();
  d.One(Msg("begin_capture", {{"template_id", "x"}, {"rate", 30}, {"d", 2}}));
  EXPECT_TRUE(IsError(d.One(Msg("frame", {{"t", 0}, {"values", {1, 2, 3}}})),
                      "dimension_mismatch"));
  EXPECT_TRUE(d.Send(Msg("frame", {{"t", 0}, {"values", {1, 2}}})).empty());
  EXPECT_TRUE(IsError(d.One(Msg("frame", {{"t", 0}, {"values", {1, 2}}})), "invalid"));
  // A single-frame capture cannot become a template.
  EXPECT_TRUE(IsError(d.One(Msg("end_capture")), "degenerate_template"));
  EXPECT_EQ(d.session.phase(), Phase::kIdle);
  EXPECT_FALSE(d.registry->get_template("x"));
}

TEST(Session, MultiSourceCaptureMergesInLayoutOrder) {
  Driver d;
  d.Hello();
  d.One(Msg("begin_capture",
            {{"template_id", "m"},
             {"rate", 10},
             {"d", 3},
             {"source_layout", Json::array({{{"id", "face"}, {"dims", 1}},
                                            {{"id", "hand"}, {"dims", 2}}})}}));
  for (int i = 0; i < 4; ++i) {
    EXPECT_TRUE(d.Send(Msg("frame", {{"source_id", "hand"}, {"t", i}, {"values", {i, -i}}})).empty());
    EXPECT_TRUE(d.Send(Msg("frame", {{"source_id", "face"}, {"t", i}, {"values", {10 * i}}})).empty());
  }
  EXPECT_TRUE(IsError(d.One(Msg("frame", {{"t", 9}, {"values", {1}}})), "missing_source"));
  EXPECT_TRUE(IsError(d.One(Msg("frame", {{"source_id", "foot"}, {"t", 9}, {"values", {1}}})),
                      "unknown_asset"));
  d.One(Msg("end_capture"));
  const auto tpl = d.registry->get_template("m");
  ASSERT_TRUE(tpl);
  ASSERT_EQ(tpl->length(), 4u);
  EXPECT_EQ(tpl->frames[2].features, (std::vector<double>{20, 2, -2}));
  EXPECT_EQ(tpl->layout.size(), 2u);
}

TEST(Session, UnknownAssets) {
  Driver d;
  d.Hello();
  EXPECT_TRUE(IsError(d.One(Msg("train", {{"template_id", "nope"}})), "unknown_asset"));
  EXPECT_TRUE(IsError(d.One(Msg("bind", {{"rig_id", "r"}, {"model_id", "nope"}})),
                      "unknown_asset"));
  EXPECT_TRUE(IsError(d.One(Msg("start_perform")), "unknown_asset"));
  d.Capture(Synth(oracle::SynthKind::kRamp, 20, 1, 1, 1.0, "ramp"));
  d.One(Msg("train", {{"template_id", "ramp"}}));
  EXPECT_TRUE(IsError(
      d.One(Msg("bind", {{"rig_id", "r"}, {"model_id", "ramp"}, {"clip_id", "nope"}})),
      "unknown_asset"));
  EXPECT_TRUE(IsError(d.One(Msg("start_perform", {{"rig_ids", {"ghost"}}})), "unknown_asset"));
}

// Two gestures, two clips, two rigs; returns the driver after start_perform.
void SetUpStage(Driver &d, std::size_t frames = 60) {
  d.Hello();
  d.Capture(Synth(oracle::SynthKind::kLissajous, frames, 2, 1, 1.0, "wave"));
  d.Capture(Synth(oracle::SynthKind::kRandomWalk, frames, 2, 2, 1.0, "bow"));
  d.One(Msg("train", {{"template_id", "wave"}}));
  d.One(Msg("train", {{"template_id", "bow"}}));
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < frames; ++i) rows.push_back({double(i)});
  d.registry->put_clip(testing::Clip(rows, 30.0, "arm"));
  EXPECT_EQ(d.One(Msg("bind", {{"rig_id", "a"}, {"model_id", "wave"}, {"clip_id", "arm"}}))["type"],
            "ack");
  d.One(Msg("bind", {{"rig_id", "a"}, {"model_id", "bow"}}));
  d.One(Msg("bind", {{"rig_id", "b"}, {"model_id", "bow"}, {"clip_id", "arm"}}));
}

TEST(Session, PerformEmitsOneOutputPerRigPerFrame) {
  Driver d;
  SetUpStage(d);
  ASSERT_EQ(d.One(Msg("start_perform"))["type"], "ack");
  const ActionTemplate replay = Synth(oracle::SynthKind::kLissajous, 60, 2, 1, 1.0, "wave");
  std::size_t a_active = 0;
  for (const auto &f : replay.frames) {
    auto ev = d.Send(Msg("frame", {{"t", f.t}, {"values", f.features}}));
    ASSERT_EQ(ev.size(), 2u);
    EXPECT_EQ(ev[0]["rig_id"], "a");
    EXPECT_EQ(ev[1]["rig_id"], "b");
    for (const auto &e : ev) {
      EXPECT_EQ(e["type"], "output");
      EXPECT_EQ(e["t"], f.t);
      EXPECT_EQ(e["hold"].get<bool>(), e["active_model_id"].is_null());
    }
    EXPECT_EQ(ev[0]["bindings"].size(), 2u);
    EXPECT_EQ(ev[1]["bindings"].size(), 1u);
    if (ev[0]["active_model_id"] == "wave") {
      ++a_active;
      EXPECT_EQ(ev[0]["pose"].size(), 1u);
      EXPECT_NEAR(ev[0]["pose"][0].get<double>(), ev[0]["mu"].get<double>() - 1.0, 1e-9);
    }
  }
  EXPECT_GE(a_active, 50u);
  EXPECT_TRUE(IsError(d.One(Msg("train", {{"template_id", "wave"}})), "phase_violation"));
  EXPECT_EQ(d.One(Msg("stop_perform"))["type"], "ack");
  EXPECT_EQ(d.session.phase(), Phase::kIdle);
}

TEST(Session, PerformRejectsWrongWidth) {
  Driver d;
  SetUpStage(d);
  d.One(Msg("start_perform", {{"rig_ids", {"b"}}}));
  EXPECT_TRUE(IsError(d.One(Msg("frame", {{"t", 0}, {"values", {1, 2, 3}}})),
                      "dimension_mismatch"));
  EXPECT_EQ(d.Send(Msg("frame", {{"t", 0}, {"values", {1, 2}}})).size(), 1u);
}

std::vector<std::string> PerformTranscript(const std::vector<Json> &mid_script,
                                           const std::vector<Json> &pre_script) {
  Driver d;
  SetUpStage(d);
  for (const auto &m : pre_script) d.Send(m);
  d.Send(Msg("start_perform"));
  const ActionTemplate replay = Synth(oracle::SynthKind::kRandomWalk, 60, 2, 2, 1.0, "bow");
  std::vector<std::string> outputs;
  for (std::size_t i = 0; i < replay.length(); ++i) {
    if (i == 5)
      for (const auto &m : mid_script) d.Send(m);
    for (const auto &ev : d.session.handle_line(
             Msg("frame", {{"t", replay.frames[i].t}, {"values", replay.frames[i].features}})
                 .dump()))
      outputs.push_back(ev);
  }
  return outputs;
}

TEST(Session, SetWindowAppliesAtNextStartPerform) {
  const Json narrow = Msg("set_window", {{"p", 1}});
  const auto baseline = PerformTranscript({}, {});
  const auto mid = PerformTranscript({narrow}, {});
  const auto pre = PerformTranscript({}, {narrow});
  EXPECT_EQ(mid, baseline);
  EXPECT_NE(pre, baseline);

  Driver d;
  d.Hello();
  EXPECT_TRUE(IsError(d.One(Msg("set_window", {{"p", 0}})), "invalid"));
}

TEST(Session, TranscriptsReplayByteForByte) {
  auto run = [] {
    Driver d;
    SetUpStage(d);
    d.Send(Msg("start_perform"));
    const ActionTemplate replay = Synth(oracle::SynthKind::kLissajous, 60, 2, 9, 1.0);
    for (const auto &f : replay.frames) d.Send(Msg("frame", {{"t", f.t}, {"values", f.features}}));
    d.Send(Msg("stop_perform"));
    d.Send(Msg("list_assets"));
    std::string all;
    for (const auto &l : d.transcript) all += l + "\n";
    return all;
  };
  const std::string first = run();
  EXPECT_GT(first.size(), 1000u);
  EXPECT_EQ(run(), first);
}

TEST(Transport, ServeStream) {
  auto registry = std::make_shared<AssetRegistry>();
  std::istringstream in(
      "{\"type\":\"hello\",\"protocol_version\":\"mop/1\"}\r\n"
      "\n"
      "   \n"
      "{\"type\":\"list_assets\",\"ref\":\"q\"}\n"
      "oops\n");
  std::ostringstream out;
  serve_stream(in, out, registry);
  std::istringstream lines(out.str());
  std::string l;
  std::vector<Json> ev;
  while (std::getline(lines, l)) ev.push_back(Json::parse(l));
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_EQ(ev[0]["type"], "ack");
  EXPECT_EQ(ev[1]["type"], "assets");
  EXPECT_EQ(ev[1]["ref"], "q");
  EXPECT_TRUE(IsError(ev[2], "bad_message"));
}

TEST(Transport, TcpSessionsAreIndependent) {
  auto registry = std::make_shared<AssetRegistry>();
  TcpServer server(registry);
  const auto port = server.listen(0);
  std::thread loop([&] { server.run(); });

  auto exchange = [&](const std::string &payload, std::size_t want_lines) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    EXPECT_EQ(::connect(fd, reinterpret_cast<sockaddr *>(&addr), sizeof addr), 0);
    ::send(fd, payload.data(), payload.size(), MSG_NOSIGNAL);
    std::string got;
    char buf[1024];
    while (std::count(got.begin(), got.end(), '\n') < long(want_lines)) {
      const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
      if (n <= 0) break;
      got.append(buf, std::size_t(n));
    }
    ::close(fd);
    return got;
  };
  const std::string a = exchange(
      "{\"type\":\"hello\",\"protocol_version\":\"mop/1\"}\n{\"type\":\"list_assets\"}\n", 2);
  EXPECT_NE(a.find("\"type\":\"ack\""), std::string::npos);
  EXPECT_NE(a.find("\"type\":\"assets\""), std::string::npos);
  // A new connection starts a fresh session: hello is needed again.
  const std::string b = exchange("{\"type\":\"list_assets\"}\n", 1);
  EXPECT_NE(b.find("phase_violation"), std::string::npos);
  server.stop();
  loop.join();
}

TEST(Transport, HttpBridge) {
  auto registry = std::make_shared<AssetRegistry>();
  HttpBridge bridge(registry);
  const auto port = bridge.listen(0);
  std::thread loop([&] { bridge.run(); });
  while (!bridge.running()) std::this_thread::yield();

  httplib::Client cli("127.0.0.1", port);
  auto created = cli.Post("/mop/sessions", "", "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 200);
  const std::string id = Json::parse(created->body)["session"];

  auto res = cli.Post("/mop/sessions/" + id,
                      "{\"type\":\"hello\",\"protocol_version\":\"mop/1\"}\n"
                      "{\"type\":\"begin_capture\",\"template_id\":\"w\",\"rate\":10,\"d\":1}\n"
                      "{\"type\":\"frame\",\"t\":0,\"values\":[0]}\n"
                      "{\"type\":\"frame\",\"t\":0.1,\"values\":[1]}\n"
                      "{\"type\":\"end_capture\"}\n"
                      "{\"type\":\"train\",\"template_id\":\"w\",\"ref\":\"t\"}\n",
                      "application/x-ndjson");
  ASSERT_TRUE(res);
  std::istringstream lines(res->body);
  std::string l;
  std::vector<Json> ev;
  while (std::getline(lines, l)) ev.push_back(Json::parse(l));
  ASSERT_EQ(ev.size(), 4u);
  EXPECT_EQ(ev[3]["type"], "trained");
  EXPECT_EQ(ev[3]["N"], 2);
  EXPECT_TRUE(registry->get_model("w"));

  // Session state persists across requests.
  auto again = cli.Post("/mop/sessions/" + id, "{\"type\":\"list_assets\"}\n",
                        "application/x-ndjson");
  ASSERT_TRUE(again);
  EXPECT_EQ(Json::parse(again->body)["type"], "assets");

  EXPECT_EQ(cli.Post("/mop/sessions/999", "", "text/plain")->status, 404);
  EXPECT_EQ(cli.Delete("/mop/sessions/" + id)->status, 204);
  EXPECT_EQ(cli.Delete("/mop/sessions/" + id)->status, 404);
  bridge.stop();
  loop.join();
}

}  // namespace
}  // namespace mop::service
