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

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "minifed/clock.hpp"
#include "minifed/errors.hpp"
#include "minifed/paths.hpp"
#include "minifed/redirector.hpp"
#include "minifed/server.hpp"
#include "minifed/telemetry.hpp"
#include "minifed/token.hpp"
#include "minifed/topology.hpp"

namespace minifed {

struct OriginCounters {
  uint64_t requests_total = 0;
  uint64_t bytes_served = 0;
  uint64_t denied_total = 0;
  uint64_t active_connections = 0;
};

// Authorization outcome shared by origin and cache: both ends enforce the
// same namespace rules (defense in depth).
enum class AuthOutcome { Allow, MissingToken, Denied };

struct AuthDecision {
  AuthOutcome outcome = AuthOutcome::Allow;
  TokenVerdict verdict = TokenVerdict::Allow;  // set when Denied
};

inline AuthDecision authorize(const Request& req, const NamespaceSpec& ns,
                              std::string_view path, uint64_t now_s) {
  if (ns.is_public) return {AuthOutcome::Allow, TokenVerdict::Allow};
  auto token = get_header(req.headers, "Authorization");
  if (!token) return {AuthOutcome::MissingToken, TokenVerdict::Malformed};
  TokenVerdict v = verify_token(*token, ns.secret, path, now_s);
  if (v == TokenVerdict::Allow) return {AuthOutcome::Allow, v};
  return {AuthOutcome::Denied, v};
}

inline Response deny_response(const AuthDecision& decision) {
  if (decision.outcome == AuthOutcome::MissingToken) {
    return Response{401, {{"X-Deny-Reason", "missing-token"}}, ""};
  }
  return Response{403, {{"X-Deny-Reason", to_string(decision.verdict)}}, ""};
}

struct OriginOptions {
  std::optional<HostPort> monitor_addr;
  std::optional<HostPort> redirector;  // register + heartbeat when set
  int64_t heartbeat_ms = kDefaultHeartbeatMs;
};

/// Serves files from root_dir over the data protocol, enforcing namespace
/// authorization and emitting f-stream records for every transfer.
class OriginService {
 public:
  OriginService(OriginSpec spec, std::vector<NamespaceSpec> namespaces,
                TcpListener listener, OriginOptions options = {})
      : spec_(std::move(spec)),
        namespaces_(std::move(namespaces)),
        options_(std::move(options)),
        emitter_(options_.monitor_addr),
        server_(std::move(listener),
                [this](const Request& req, ProtocolServer::Context& ctx) {
                  return handle(req, ctx);
                }) {
    std::error_code ec;
    if (!std::filesystem::is_directory(spec_.root_dir, ec)) {
      throw ConfigError("origin " + spec_.id + ": root_dir not a directory: " +
                        spec_.root_dir);
    }
    // The advertised endpoint keeps the config's host but must carry the
    // port actually bound (the harness binds port 0).
    spec_.endpoint.port = server_.port();
  }

  ~OriginService() { stop(); }

  void start() {
    server_.start();
    if (options_.redirector) {
      register_once();
      heartbeat_thread_ = std::thread([this] { heartbeat_loop(); });
    }
  }

  void stop() {
    {
      std::lock_guard lk(hb_mu_);
      if (stopping_) return;
      stopping_ = true;
    }
    hb_cv_.notify_all();
    if (heartbeat_thread_.joinable()) heartbeat_thread_.join();
    server_.stop();
  }

  uint16_t port() const { return server_.port(); }
  const OriginSpec& spec() const { return spec_; }

  OriginCounters counters() const {
    std::lock_guard lk(mu_);
    OriginCounters c = counters_;
    c.active_connections = server_.active_connections();
    return c;
  }

  void set_namespace_secret(const std::string& prefix,
                            const std::string& secret) {
    std::lock_guard lk(mu_);
    for (auto& ns : namespaces_) {
      if (ns.prefix == prefix) ns.secret = secret;
    }
  }

  Response handle(const Request& req, ProtocolServer::Context& ctx) {
    switch (req.method) {
      case Method::Get:
        return handle_get(req, ctx);
      case Method::Stats:
        return stats_response();
      case Method::Locate:
        return Response{404, {}, ""};
    }
    return Response{500, {}, ""};
  }

 private:
  Response handle_get(const Request& req, ProtocolServer::Context& ctx) {
    {
      std::lock_guard lk(mu_);
      ++counters_.requests_total;
    }
    if (!is_valid_object_path(req.path)) {
      return Response{404, {{"X-Error", "bad-path"}}, ""};
    }

    NamespaceSpec ns;
    {
      std::lock_guard lk(mu_);
      const NamespaceSpec* found = resolve_namespace(req.path, namespaces_);
      if (!found) return Response{404, {{"X-Error", "no-namespace"}}, ""};
      ns = *found;
    }
    // Paths under namespaces this origin does not own are not here.
    bool owned = false;
    for (const auto& p : spec_.namespaces) {
      if (p == ns.prefix) owned = true;
    }
    if (!owned) return Response{404, {{"X-Error", "not-owned"}}, ""};

    AuthDecision decision = authorize(req, ns, req.path, now_unix_s());
    if (decision.outcome != AuthOutcome::Allow) {
      std::lock_guard lk(mu_);
      ++counters_.denied_total;
      return deny_response(decision);
    }

    auto file = map_to_file(spec_.root_dir, req.path);
    std::error_code ec;
    if (!file || !std::filesystem::is_regular_file(*file, ec)) {
      return Response{404, {}, ""};
    }
    std::ifstream in(*file, std::ios::binary);
    if (!in) return Response{500, {}, ""};
    std::ostringstream buf;
    buf << in.rdbuf();
    if (!in.good() && !in.eof()) return Response{500, {}, ""};
    std::string body = std::move(buf).str();

    std::string xfer = emitter_.next_xfer_id(spec_.id);
    int64_t opened_ms = now_unix_ms();
    emitter_.emit(MonitorRecord{Stream::F, opened_ms, spec_.id, "origin",
                                RecordEvent::Open, req.path, body.size(),
                                std::nullopt, ctx.peer, xfer});
    uint64_t size = body.size();
    std::string path = req.path;
    std::string peer = ctx.peer;
    ctx.on_written = [this, xfer, opened_ms, size, path, peer](bool ok) {
      int64_t now = now_unix_ms();
      emitter_.emit(MonitorRecord{
          Stream::F, now, spec_.id, "origin", RecordEvent::Close, path,
          ok ? size : 0, uint64_t(now - opened_ms), peer, xfer});
      if (ok) {
        std::lock_guard lk(mu_);
        counters_.bytes_served += size;
      }
    };
    return Response{
        200, {{"Content-Length", std::to_string(body.size())}}, std::move(body)};
  }

  Response stats_response() {
    OriginCounters c = counters();
    nlohmann::json j = {{"requests_total", c.requests_total},
                        {"bytes_served", c.bytes_served},
                        {"denied_total", c.denied_total},
                        {"active_connections", c.active_connections}};
    std::string body = j.dump();
    return Response{
        200, {{"Content-Length", std::to_string(body.size())}}, body};
  }

  void register_once() {
    try {
      send_request(*options_.redirector, make_register_request(spec_), 2000);
    } catch (...) {
      // Redirector may be briefly down; the heartbeat retries.
    }
  }

  void heartbeat_loop() {
    std::unique_lock lk(hb_mu_);
    while (!stopping_) {
      hb_cv_.wait_for(lk, std::chrono::milliseconds(options_.heartbeat_ms),
                      [this] { return stopping_; });
      if (stopping_) break;
      lk.unlock();
      register_once();
      lk.lock();
    }
  }

  OriginSpec spec_;
  std::vector<NamespaceSpec> namespaces_;
  OriginOptions options_;
  MonitorEmitter emitter_;
  mutable std::mutex mu_;
  OriginCounters counters_;
  std::mutex hb_mu_;
  std::condition_variable hb_cv_;
  bool stopping_ = false;
  std::thread heartbeat_thread_;
  ProtocolServer server_;
};

}  // namespace minifed
