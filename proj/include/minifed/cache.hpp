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

#include <filesystem>
#include <fstream>
#include <future>
#include <list>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "minifed/clock.hpp"
#include "minifed/errors.hpp"
#include "minifed/net.hpp"
#include "minifed/origin.hpp"
#include "minifed/paths.hpp"
#include "minifed/server.hpp"
#include "minifed/telemetry.hpp"
#include "minifed/topology.hpp"

namespace minifed {

struct CacheEntry {
  std::string path;
  uint64_t size_bytes = 0;
  int64_t last_access_ms = 0;
};

/// LRU bookkeeping only — no I/O. Recency is the order of admit/touch
/// operations, so eviction order is exact even when timestamps tie.
class CacheIndex {
 public:
  explicit CacheIndex(uint64_t capacity_bytes) : capacity_(capacity_bytes) {}

  bool contains(const std::string& path) const {
    return by_path_.count(path) > 0;
  }

  std::optional<uint64_t> size_of(const std::string& path) const {
    auto it = by_path_.find(path);
    if (it == by_path_.end()) return std::nullopt;
    return it->second->size_bytes;
  }

  void touch(const std::string& path, int64_t now_ms) {
    auto it = by_path_.find(path);
    if (it == by_path_.end()) return;
    it->second->last_access_ms = now_ms;
    lru_.splice(lru_.end(), lru_, it->second);
  }

  /// Admits `path`, evicting least-recently-accessed entries (oldest
  /// first) until it fits. Returns the evicted entries in eviction order,
  /// or nullopt when the object alone exceeds capacity (admission
  /// refused, index unchanged).
  std::optional<std::vector<CacheEntry>> admit(const std::string& path,
                                               uint64_t size_bytes,
                                               int64_t now_ms) {
    if (size_bytes > capacity_) return std::nullopt;
    auto existing = by_path_.find(path);
    if (existing != by_path_.end()) {
      total_ -= existing->second->size_bytes;
      lru_.erase(existing->second);
      by_path_.erase(existing);
    }
    std::vector<CacheEntry> evicted;
    while (total_ + size_bytes > capacity_) {
      evicted.push_back(lru_.front());
      total_ -= lru_.front().size_bytes;
      by_path_.erase(lru_.front().path);
      lru_.pop_front();
    }
    lru_.push_back(CacheEntry{path, size_bytes, now_ms});
    by_path_[path] = std::prev(lru_.end());
    total_ += size_bytes;
    return evicted;
  }

  void remove(const std::string& path) {
    auto it = by_path_.find(path);
    if (it == by_path_.end()) return;
    total_ -= it->second->size_bytes;
    lru_.erase(it->second);
    by_path_.erase(it);
  }

  uint64_t total_bytes() const { return total_; }
  uint64_t capacity_bytes() const { return capacity_; }
  std::size_t count() const { return by_path_.size(); }

  std::vector<CacheEntry> entries_lru_order() const {
    return {lru_.begin(), lru_.end()};
  }

 private:
  uint64_t capacity_;
  uint64_t total_ = 0;
  std::list<CacheEntry> lru_;  // front = least recently accessed
  std::unordered_map<std::string, std::list<CacheEntry>::iterator> by_path_;
};

struct CacheCounters {
  uint64_t requests_total = 0;
  uint64_t hits = 0;
  uint64_t misses = 0;
  uint64_t evictions = 0;
  uint64_t bytes_served = 0;
  uint64_t bytes_cached = 0;
  uint64_t active_connections = 0;
};

struct CacheOptions {
  std::optional<HostPort> monitor_addr;
  int fetch_timeout_ms = 5000;
};

/// Disk cache in front of the origins: hits served locally, misses pulled
/// via redirector → origin, capacity enforced by LRU eviction. Concurrent
/// misses for one path coalesce onto a single origin fetch.
///
/// Lock order: mu_ (index, counters, namespace table) before file_mu_
/// (object files; shared for reads, exclusive for create/remove).
class CacheService {
 public:
  CacheService(CacheSpec spec, FederationTopology topology,
               TcpListener listener, CacheOptions options = {})
      : spec_(std::move(spec)),
        topology_(std::move(topology)),
        options_(std::move(options)),
        emitter_(options_.monitor_addr),
        index_(spec_.capacity_bytes),
        server_(std::move(listener),
                [this](const Request& req, ProtocolServer::Context& ctx) {
                  return handle(req, ctx);
                }) {
    std::error_code ec;
    std::filesystem::create_directories(spec_.disk_dir, ec);
    if (!std::filesystem::is_directory(spec_.disk_dir, ec)) {
      throw ConfigError("cache " + spec_.id + ": disk_dir unusable: " +
                        spec_.disk_dir);
    }
    spec_.endpoint.port = server_.port();
    recover_from_disk();
  }

  ~CacheService() { stop(); }

  void start() { server_.start(); }
  void stop() { server_.stop(); }
  uint16_t port() const { return server_.port(); }
  const CacheSpec& spec() const { return spec_; }

  CacheCounters counters() const {
    std::lock_guard lk(mu_);
    CacheCounters c = counters_;
    c.bytes_cached = index_.total_bytes();
    c.active_connections = server_.active_connections();
    return c;
  }

  void set_namespace_secret(const std::string& prefix,
                            const std::string& secret) {
    std::lock_guard lk(mu_);
    for (auto& ns : topology_.namespaces) {
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
  // Outcome of one origin fetch, shared with coalesced followers. `body`
  // is only retained for pass-through objects (larger than the cache).
  struct FetchOutcome {
    int code = 500;
    bool admitted = false;
    std::string body;
    uint64_t size = 0;
  };

  struct Inflight {
    std::promise<FetchOutcome> promise;
    std::shared_future<FetchOutcome> future;
  };

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
      const NamespaceSpec* found =
          resolve_namespace(req.path, topology_.namespaces);
      if (!found) return Response{404, {{"X-Error", "no-namespace"}}, ""};
      ns = *found;
    }
    AuthDecision decision = authorize(req, ns, req.path, now_unix_s());
    if (decision.outcome != AuthOutcome::Allow) {
      return deny_response(decision);
    }

    if (auto hit = try_serve_cached(req.path, ctx)) return std::move(*hit);

    // Miss: coalesce concurrent fetches of the same path behind a leader.
    std::shared_future<FetchOutcome> future;
    bool leader = false;
    {
      std::lock_guard lk(inflight_mu_);
      auto it = inflight_.find(req.path);
      if (it == inflight_.end()) {
        leader = true;
        Inflight& entry = inflight_[req.path];
        entry.future = entry.promise.get_future().share();
        future = entry.future;
      } else {
        future = it->second.future;
      }
    }

    if (leader) {
      FetchOutcome outcome = fetch_from_origin(req);
      FetchOutcome shared = outcome;
      if (shared.admitted) shared.body.clear();  // followers read the disk
      {
        std::lock_guard lk(inflight_mu_);
        auto node = inflight_.extract(req.path);
        node.mapped().promise.set_value(std::move(shared));
      }
      if (outcome.code != 200) return Response{outcome.code, {}, ""};
      return serve_object(req.path, std::move(outcome.body), false, ctx);
    }

    FetchOutcome outcome = future.get();
    if (outcome.code != 200) return Response{outcome.code, {}, ""};
    if (outcome.admitted) {
      if (auto hit = try_serve_cached(req.path, ctx)) return std::move(*hit);
      // Evicted in the window between the leader's admit and now; fetch
      // independently rather than recursing into another coalesce round.
      FetchOutcome again = fetch_from_origin(req);
      if (again.code != 200) return Response{again.code, {}, ""};
      outcome = std::move(again);
      if (outcome.admitted) {
        if (auto hit = try_serve_cached(req.path, ctx)) return std::move(*hit);
        return Response{500, {{"X-Error", "disk-read"}}, ""};
      }
    }
    return serve_object(req.path, std::move(outcome.body), false, ctx);
  }

  /// Serves from the local disk when the index knows the path, counting a
  /// hit. Returns nullopt when absent (or lost to a concurrent eviction).
  std::optional<Response> try_serve_cached(const std::string& path,
                                           ProtocolServer::Context& ctx) {
    {
      std::lock_guard lk(mu_);
      if (!index_.contains(path)) return std::nullopt;
      index_.touch(path, now_unix_ms());
    }
    std::string body;
    {
      std::shared_lock flk(file_mu_);
      if (!read_object(path, body)) return std::nullopt;
    }
    return serve_object(path, std::move(body), true, ctx);
  }

  /// Counts the outcome, emits the g-record, and builds the 200 with
  /// f-open/f-close bracketing the actual socket write.
  Response serve_object(const std::string& path, std::string body,
                        bool as_hit, ProtocolServer::Context& ctx) {
    {
      std::lock_guard lk(mu_);
      if (as_hit) {
        ++counters_.hits;
      } else {
        ++counters_.misses;
      }
      emit_g(as_hit ? RecordEvent::Hit : RecordEvent::Miss, path, body.size());
    }
    std::string xfer = emitter_.next_xfer_id(spec_.id);
    int64_t opened_ms = now_unix_ms();
    uint64_t size = body.size();
    emitter_.emit(MonitorRecord{Stream::F, opened_ms, spec_.id, "cache",
                                RecordEvent::Open, path, size, std::nullopt,
                                ctx.peer, xfer});
    std::string peer = ctx.peer;
    ctx.on_written = [this, xfer, opened_ms, size, path, peer](bool ok) {
      int64_t now = now_unix_ms();
      emitter_.emit(MonitorRecord{Stream::F, now, spec_.id, "cache",
                                  RecordEvent::Close, path, ok ? size : 0,
                                  uint64_t(now - opened_ms), peer, xfer});
      if (ok) {
        std::lock_guard lk(mu_);
        counters_.bytes_served += size;
      }
    };
    return Response{200,
                    {{"Content-Length", std::to_string(size)},
                     {"X-Cache", as_hit ? "HIT" : "MISS"}},
                    std::move(body)};
  }

  // Full miss flow: redirector LOCATE, origin GET (client token forwarded),
  // then admission. Counters untouched; serving paths do that.
  FetchOutcome fetch_from_origin(const Request& req) {
    FetchOutcome out;
    HostPort origin;
    try {
      Request locate;
      locate.method = Method::Locate;
      locate.path = req.path;
      Response r = send_request(topology_.redirector, locate,
                                options_.fetch_timeout_ms);
      if (r.code == 404) {
        out.code = 404;
        return out;
      }
      auto loc = r.code == 302 ? get_header(r.headers, "Location")
                               : std::nullopt;
      auto parsed = loc ? parse_host_port(*loc) : std::nullopt;
      if (!parsed) {
        out.code = 500;
        return out;
      }
      origin = *parsed;
    } catch (const std::exception&) {
      out.code = 500;
      return out;
    }

    Response origin_resp;
    try {
      Request get;
      get.method = Method::Get;
      get.path = req.path;
      if (auto token = get_header(req.headers, "Authorization")) {
        get.headers.emplace_back("Authorization", std::string(*token));
      }
      origin_resp = send_request(origin, get, options_.fetch_timeout_ms);
    } catch (const std::exception&) {
      out.code = 500;
      return out;
    }
    if (origin_resp.code != 200) {
      // 4xx passes through; anything else collapses to 500.
      bool passthrough = origin_resp.code == 401 || origin_resp.code == 403 ||
                         origin_resp.code == 404;
      out.code = passthrough ? origin_resp.code : 500;
      return out;
    }

    out.code = 200;
    out.size = origin_resp.body.size();
    out.admitted = admit_object(req.path, origin_resp.body);
    out.body = std::move(origin_resp.body);
    return out;
  }

  /// Writes the object file, then updates the index, evicting as needed.
  /// False means pass-through: object larger than the whole cache, or the
  /// disk failed.
  bool admit_object(const std::string& path, const std::string& body) {
    if (body.size() > spec_.capacity_bytes) return false;

    std::filesystem::path dest = object_file(path);
    {
      std::unique_lock flk(file_mu_);
      std::error_code ec;
      std::filesystem::create_directories(dest.parent_path(), ec);
      std::filesystem::path tmp = dest;
      tmp += ".part";
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      f.write(body.data(), std::streamsize(body.size()));
      f.close();
      if (!f.good()) {
        std::filesystem::remove(tmp, ec);
        return false;
      }
      std::filesystem::rename(tmp, dest, ec);
      if (ec) {
        std::filesystem::remove(tmp, ec);
        return false;
      }
    }

    std::lock_guard lk(mu_);
    auto evicted = index_.admit(path, body.size(), now_unix_ms());
    if (!evicted) {
      std::unique_lock flk(file_mu_);
      std::error_code ec;
      std::filesystem::remove(dest, ec);
      return false;
    }
    remove_evicted_locked(*evicted);
    return true;
  }

  // Caller holds mu_.
  void remove_evicted_locked(const std::vector<CacheEntry>& evicted) {
    std::unique_lock flk(file_mu_);
    for (const auto& entry : evicted) {
      std::error_code ec;
      std::filesystem::remove(object_file(entry.path), ec);
      ++counters_.evictions;
      emit_g(RecordEvent::Evict, entry.path, entry.size_bytes);
    }
  }

  void emit_g(RecordEvent event, const std::string& path, uint64_t bytes) {
    emitter_.emit(MonitorRecord{Stream::G, now_unix_ms(), spec_.id, "cache",
                                event, path, bytes, std::nullopt, "",
                                emitter_.next_xfer_id(spec_.id)});
  }

  std::filesystem::path object_file(const std::string& path) const {
    std::filesystem::path p = spec_.disk_dir;
    p += path;
    return p;
  }

  bool read_object(const std::string& path, std::string& out) {
    std::ifstream in(object_file(path), std::ios::binary);
    if (!in) return false;
    std::ostringstream buf;
    buf << in.rdbuf();
    out = std::move(buf).str();
    return true;
  }

  // Entries survive restarts: scan the disk tree (lexicographic order for
  // reproducibility) with last_access set to startup time.
  void recover_from_disk() {
    std::vector<std::pair<std::string, uint64_t>> found;
    std::filesystem::path root(spec_.disk_dir);
    std::error_code ec;
    for (auto it = std::filesystem::recursive_directory_iterator(root, ec);
         it != std::filesystem::recursive_directory_iterator();
         it.increment(ec)) {
      if (ec) break;
      if (!it->is_regular_file()) continue;
      if (it->path().extension() == ".part") {
        std::filesystem::remove(it->path(), ec);
        continue;
      }
      std::string rel =
          "/" + it->path().lexically_relative(root).generic_string();
      if (!is_valid_object_path(rel)) continue;
      found.emplace_back(rel, it->file_size());
    }
    std::sort(found.begin(), found.end());
    int64_t now = now_unix_ms();
    std::lock_guard lk(mu_);
    for (const auto& [path, size] : found) {
      auto evicted = index_.admit(path, size, now);
      if (!evicted) {
        std::filesystem::remove(object_file(path), ec);
        continue;
      }
      remove_evicted_locked(*evicted);
    }
  }

  Response stats_response() {
    CacheCounters c = counters();
    nlohmann::json j = {{"requests_total", c.requests_total},
                        {"hits", c.hits},
                        {"misses", c.misses},
                        {"evictions", c.evictions},
                        {"bytes_served", c.bytes_served},
                        {"bytes_cached", c.bytes_cached},
                        {"active_connections", c.active_connections}};
    std::string body = j.dump();
    return Response{
        200, {{"Content-Length", std::to_string(body.size())}}, body};
  }

  CacheSpec spec_;
  FederationTopology topology_;
  CacheOptions options_;
  MonitorEmitter emitter_;
  mutable std::mutex mu_;         // index, counters, namespace table
  std::shared_mutex file_mu_;     // object files: shared read, unique write
  CacheIndex index_;
  CacheCounters counters_;
  std::mutex inflight_mu_;
  std::map<std::string, Inflight> inflight_;
  ProtocolServer server_;
};

}  // namespace minifed
