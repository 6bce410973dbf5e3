// mop/transport.hpp

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

// Byte-stream framing for sessions: newline-delimited messages over an
// iostream pair or a TCP socket (POSIX). One session per stream/connection.

#ifndef MOP_TRANSPORT_HPP_
#define MOP_TRANSPORT_HPP_

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cstdint>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mop/session.hpp"

namespace mop::service {

/// Runs one session until `in` is exhausted. Blank lines are ignored.
inline void serve_stream(std::istream &in, std::ostream &out,
                         std::shared_ptr<AssetRegistry> registry,
                         ArbitrationConfig arbitration = {}) {
  Session session(std::move(registry), arbitration);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    for (const auto &ev : session.handle_line(line)) out << ev << '\n';
    out.flush();
  }
}

/// Accepts TCP connections on localhost and serves each on its own thread.
class TcpServer {
 public:
  TcpServer(std::shared_ptr<AssetRegistry> registry,
            ArbitrationConfig arbitration = {})
      : registry_(std::move(registry)), arbitration_(arbitration) {}

  ~TcpServer() { stop(); }

  TcpServer(const TcpServer &) = delete;
  TcpServer &operator=(const TcpServer &) = delete;

  /// Binds and listens; port 0 picks a free port. Returns the bound port.
  std::uint16_t listen(std::uint16_t port, bool any_address = false) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw std::runtime_error("socket() failed");
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(any_address ? INADDR_ANY : INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) < 0)
      throw std::runtime_error("bind() failed on port " + std::to_string(port));
    if (::listen(fd_, 16) < 0) throw std::runtime_error("listen() failed");
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr *>(&addr), &len);
    return ntohs(addr.sin_port);
  }

  /// Blocks accepting connections until stop() is called.
  void run() {
    while (!stopping_) {
      const int client = ::accept(fd_, nullptr, nullptr);
      if (client < 0) {
        if (stopping_) break;
        if (errno == EINTR) continue;
        break;
      }
      std::lock_guard lock(mu_);
      clients_.push_back(client);
      workers_.emplace_back([this, client] { Serve(client); });
    }
  }

  void stop() {
    if (stopping_.exchange(true)) return;
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
    }
    std::vector<std::thread> workers;
    {
      std::lock_guard lock(mu_);
      for (int c : clients_) ::shutdown(c, SHUT_RDWR);
      workers.swap(workers_);
    }
    for (auto &w : workers)
      if (w.joinable()) w.join();
  }

 private:
  void Serve(int client) {
    Session session(registry_, arbitration_);
    std::string buffer;
    char chunk[4096];
    while (true) {
      const ssize_t got = ::recv(client, chunk, sizeof(chunk), 0);
      if (got <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(got));
      std::size_t nl;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::string reply;
        for (const auto &ev : session.handle_line(line)) reply += ev + "\n";
        if (!SendAll(client, reply)) goto done;
      }
    }
  done:
    std::lock_guard lock(mu_);
    clients_.erase(std::remove(clients_.begin(), clients_.end(), client),
                   clients_.end());
    ::close(client);
  }

  static bool SendAll(int fd, const std::string &data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n =
          ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  }

  std::shared_ptr<AssetRegistry> registry_;
  ArbitrationConfig arbitration_;
  int fd_ = -1;
  std::atomic<bool> stopping_{false};
  std::mutex mu_;
  std::vector<int> clients_;
  std::vector<std::thread> workers_;
};

}  // namespace mop::service

#endif  // MOP_TRANSPORT_HPP_
