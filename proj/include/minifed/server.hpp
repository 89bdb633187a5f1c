// Copyright 2026 The minifed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <utility>

#include "minifed/net.hpp"
#include "minifed/wire.hpp"

namespace minifed {

/// Thread-per-connection OSDF-MINI/1 server: reads one request, invokes
/// the handler, writes the response, closes. `on_written` (when the
/// handler sets it) fires after the response hit the socket, so callers
/// can emit transfer-close telemetry with the real outcome.
class ProtocolServer {
 public:
  struct Context {
    std::string peer;
    std::function<void(bool ok)> on_written;
  };
  using Handler = std::function<Response(const Request&, Context&)>;

  ProtocolServer(TcpListener listener, Handler handler)
      : listener_(std::move(listener)), handler_(std::move(handler)) {}

  ~ProtocolServer() { stop(); }

  void start() {
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  void stop() {
    bool expected = false;
    if (!stopped_.compare_exchange_strong(expected, true)) return;
    stop_.signal();
    if (accept_thread_.joinable()) accept_thread_.join();
    std::unique_lock lk(mu_);
    idle_cv_.wait_for(lk, std::chrono::seconds(10),
                      [this] { return live_ == 0; });
  }

  uint16_t port() const { return listener_.port(); }
  uint64_t active_connections() const { return active_.load(); }

 private:
  void accept_loop() {
    while (auto conn = listener_.accept(stop_)) {
      {
        std::lock_guard lk(mu_);
        ++live_;
      }
      std::thread(&ProtocolServer::serve, this, std::move(*conn)).detach();
    }
  }

  void serve(TcpStream conn) {
    active_.fetch_add(1);
    Context ctx;
    ctx.peer = conn.peer();
    try {
      conn.set_timeouts(5000, 5000);
      std::string head = conn.read_until("\r\n\r\n", 64 * 1024);
      Request req = decode_request(head);
      Response resp = handler_(req, ctx);
      bool ok = true;
      try {
        conn.write_all(encode_response(resp));
      } catch (...) {
        ok = false;
      }
      if (ctx.on_written) ctx.on_written(ok);
    } catch (...) {
      // Malformed request or dead peer: drop the connection.
      if (ctx.on_written) ctx.on_written(false);
    }
    active_.fetch_sub(1);
    std::lock_guard lk(mu_);
    if (--live_ == 0) idle_cv_.notify_all();
  }

  TcpListener listener_;
  Handler handler_;
  StopEvent stop_;
  std::thread accept_thread_;
  std::atomic<bool> stopped_{false};
  std::atomic<uint64_t> active_{0};
  std::mutex mu_;
  std::condition_variable idle_cv_;
  int live_ = 0;
};

}  // namespace minifed
