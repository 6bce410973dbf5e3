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

// HTTP bridge for browser clients. Each session lives server-side; the body
// of a request is a batch of newline-delimited protocol messages and the
// response body carries the resulting events, one per line, in order.
//
//   POST   /mop/sessions        -> {"session": "<id>"}
//   POST   /mop/sessions/<id>   -> events for the posted messages
//   DELETE /mop/sessions/<id>   -> 204
//
// Optional static mount serves a client bundle from a directory.

#ifndef MOP_HTTP_BRIDGE_HPP_
#define MOP_HTTP_BRIDGE_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>

#include "httplib.h"
#include "mop/session.hpp"

namespace mop::service {

class HttpBridge {
 public:
  HttpBridge(std::shared_ptr<AssetRegistry> registry,
             ArbitrationConfig arbitration = {})
      : registry_(std::move(registry)), arbitration_(arbitration) {
    server_.Post("/mop/sessions", [this](const httplib::Request &,
                                         httplib::Response &res) {
      std::lock_guard lock(mu_);
      const std::string id = std::to_string(++next_id_);
      sessions_[id] = std::make_shared<Slot>(registry_, arbitration_);
      res.set_content(Json{{"session", id}}.dump() + "\n", "application/json");
    });
    server_.Post(R"(/mop/sessions/(\w+))", [this](const httplib::Request &req,
                                                  httplib::Response &res) {
      auto slot = Find(req.matches[1]);
      if (!slot) {
        res.status = 404;
        return;
      }
      std::lock_guard lock(slot->mu);
      std::istringstream in(req.body);
      std::string line, out;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        for (const auto &ev : slot->session.handle_line(line)) out += ev + "\n";
      }
      res.set_content(out, "application/x-ndjson");
    });
    server_.Delete(R"(/mop/sessions/(\w+))", [this](const httplib::Request &req,
                                                    httplib::Response &res) {
      std::lock_guard lock(mu_);
      res.status = sessions_.erase(req.matches[1]) ? 204 : 404;
    });
  }

  ~HttpBridge() { stop(); }

  /// Serves files under `dir` at `/`.
  bool mount(const std::string &dir) { return server_.set_mount_point("/", dir); }

  /// Binds to loopback (or all interfaces); port 0 picks a free port.
  std::uint16_t listen(std::uint16_t port, bool any_address = false) {
    const char *host = any_address ? "0.0.0.0" : "127.0.0.1";
    const int bound = port == 0 ? server_.bind_to_any_port(host)
                                : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0)
      throw std::runtime_error("http bind failed on port " + std::to_string(port));
    return static_cast<std::uint16_t>(bound);
  }

  /// Blocks until stop().
  void run() { server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  bool running() const { return server_.is_running(); }

 private:
  struct Slot {
    Slot(std::shared_ptr<AssetRegistry> r, ArbitrationConfig a)
        : session(std::move(r), a) {}
    std::mutex mu;
    Session session;
  };

  std::shared_ptr<Slot> Find(const std::string &id) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::shared_ptr<AssetRegistry> registry_;
  ArbitrationConfig arbitration_;
  httplib::Server server_;
  std::mutex mu_;
  std::uint64_t next_id_ = 0;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

}  // namespace mop::service

#endif  // MOP_HTTP_BRIDGE_HPP_
