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

#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "minifed/clock.hpp"
#include "minifed/errors.hpp"
#include "minifed/paths.hpp"
#include "minifed/server.hpp"
#include "minifed/topology.hpp"

namespace minifed {

class RegistrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int64_t kDefaultLivenessWindowMs = 30'000;
inline constexpr int64_t kDefaultHeartbeatMs = 10'000;

/// Prefix → owning origin, driven entirely by REGISTER heartbeats. An
/// origin whose last registration is older than the liveness window is
/// treated as absent even before prune_stale removes it.
class RoutingTable {
 public:
  explicit RoutingTable(int64_t liveness_window_ms = kDefaultLivenessWindowMs)
      : window_ms_(liveness_window_ms) {}

  /// Registers or refreshes an origin. Throws RegistrationError when a
  /// prefix is already owned by a different origin; the table is left
  /// unchanged in that case.
  void register_origin(const std::string& id, const HostPort& endpoint,
                       const std::vector<std::string>& namespaces,
                       int64_t now_ms) {
    if (namespaces.empty()) {
      throw RegistrationError("origin " + id + " registers no namespaces");
    }
    for (const auto& p : namespaces) {
      if (!is_valid_namespace_prefix(p)) {
        throw RegistrationError("malformed prefix: " + p);
      }
    }
    std::unique_lock lk(mu_);
    for (const auto& p : namespaces) {
      auto it = owner_.find(p);
      if (it != owner_.end() && it->second != id) {
        throw RegistrationError("prefix " + p + " already owned by " +
                                it->second);
      }
    }
    auto& entry = origins_[id];
    for (const auto& p : entry.namespaces) owner_.erase(p);
    entry.endpoint = endpoint;
    entry.namespaces = namespaces;
    entry.last_seen_ms = now_ms;
    for (const auto& p : namespaces) owner_[p] = id;
  }

  /// Longest registered prefix wins; a stale owner yields nullopt rather
  /// than falling back to a shorter prefix.
  std::optional<HostPort> locate(std::string_view path, int64_t now_ms) const {
    std::shared_lock lk(mu_);
    const std::string* best_owner = nullptr;
    std::size_t best_len = 0;
    for (const auto& [prefix, id] : owner_) {
      if (prefix_matches(prefix, path) && prefix.size() >= best_len) {
        best_len = prefix.size();
        best_owner = &id;
      }
    }
    if (!best_owner) return std::nullopt;
    const auto& entry = origins_.at(*best_owner);
    if (now_ms - entry.last_seen_ms > window_ms_) return std::nullopt;
    return entry.endpoint;
  }

  std::vector<std::string> prune_stale(int64_t now_ms) {
    std::unique_lock lk(mu_);
    std::vector<std::string> removed;
    for (auto it = origins_.begin(); it != origins_.end();) {
      if (now_ms - it->second.last_seen_ms > window_ms_) {
        for (const auto& p : it->second.namespaces) owner_.erase(p);
        removed.push_back(it->first);
        it = origins_.erase(it);
      } else {
        ++it;
      }
    }
    return removed;
  }

  std::size_t registered_count() const {
    std::shared_lock lk(mu_);
    return origins_.size();
  }

  std::size_t live_count(int64_t now_ms) const {
    std::shared_lock lk(mu_);
    std::size_t n = 0;
    for (const auto& [id, e] : origins_) {
      if (now_ms - e.last_seen_ms <= window_ms_) ++n;
    }
    return n;
  }

 private:
  struct Entry {
    HostPort endpoint;
    std::vector<std::string> namespaces;
    int64_t last_seen_ms = 0;
  };

  int64_t window_ms_;
  mutable std::shared_mutex mu_;
  std::map<std::string, Entry> origins_;
  std::map<std::string, std::string> owner_;  // prefix → origin id
};

// Registration rides in a `Register` header on a STATS request:
//   Register: {"id":"...","endpoint":"host:port","namespaces":[...]}
// Ack is 200; conflicts come back 403 with an X-Error header.

inline Request make_register_request(const OriginSpec& spec) {
  nlohmann::json j = {{"id", spec.id},
                      {"endpoint", spec.endpoint.str()},
                      {"namespaces", spec.namespaces}};
  Request req;
  req.method = Method::Stats;
  req.headers.emplace_back("Register", j.dump());
  return req;
}

class RedirectorService {
 public:
  RedirectorService(TcpListener listener,
                    int64_t liveness_window_ms = kDefaultLivenessWindowMs)
      : table_(liveness_window_ms),
        server_(std::move(listener),
                [this](const Request& req, ProtocolServer::Context& ctx) {
                  return handle(req, ctx);
                }) {}

  void start() { server_.start(); }
  void stop() { server_.stop(); }
  uint16_t port() const { return server_.port(); }
  RoutingTable& table() { return table_; }

  Response handle(const Request& req, ProtocolServer::Context&) {
    if (req.method == Method::Locate) {
      std::lock_guard lk(stats_mu_);
      ++locate_total_;
    }
    switch (req.method) {
      case Method::Locate: {
        auto endpoint = table_.locate(req.path, now_unix_ms());
        if (!endpoint) {
          return Response{404, {}, ""};
        }
        {
          std::lock_guard lk(stats_mu_);
          ++found_total_;
        }
        return Response{302, {{"Location", endpoint->str()}}, ""};
      }
      case Method::Stats: {
        if (auto reg = get_header(req.headers, "Register")) {
          return handle_register(*reg);
        }
        return stats_response();
      }
      case Method::Get:
        return Response{404, {}, ""};
    }
    return Response{500, {}, ""};
  }

 private:
  Response handle_register(std::string_view body) {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") ||
        !j.contains("endpoint") || !j.contains("namespaces")) {
      return Response{403, {{"X-Error", "bad-register"}}, ""};
    }
    auto endpoint = parse_host_port(j["endpoint"].get<std::string>());
    if (!endpoint) {
      return Response{403, {{"X-Error", "bad-register"}}, ""};
    }
    try {
      table_.register_origin(j["id"].get<std::string>(), *endpoint,
                             j["namespaces"].get<std::vector<std::string>>(),
                             now_unix_ms());
    } catch (const RegistrationError& e) {
      return Response{403, {{"X-Error", "prefix-conflict"}}, ""};
    } catch (const nlohmann::json::exception&) {
      return Response{403, {{"X-Error", "bad-register"}}, ""};
    }
    return Response{200, {{"Content-Length", "0"}}, ""};
  }

  Response stats_response() {
    int64_t now = now_unix_ms();
    nlohmann::json j;
    {
      std::lock_guard lk(stats_mu_);
      j = {{"origins_registered", table_.registered_count()},
           {"origins_live", table_.live_count(now)},
           {"locate_total", locate_total_},
           {"found_total", found_total_},
           {"active_connections", server_.active_connections()}};
    }
    std::string body = j.dump();
    return Response{
        200, {{"Content-Length", std::to_string(body.size())}}, body};
  }

  RoutingTable table_;
  std::mutex stats_mu_;
  uint64_t locate_total_ = 0;
  uint64_t found_total_ = 0;
  ProtocolServer server_;
};

}  // namespace minifed
