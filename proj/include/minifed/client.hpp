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

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "minifed/clock.hpp"
#include "minifed/errors.hpp"
#include "minifed/geo.hpp"
#include "minifed/net.hpp"
#include "minifed/topology.hpp"
#include "minifed/wire.hpp"

namespace minifed {

struct FetchOptions {
  std::optional<std::string> token;
  Coord at{0.0, 0.0};
  int connect_timeout_ms = 5000;
  int read_timeout_ms = 5000;
};

struct FetchResult {
  std::string body;
  std::string served_by;
  double rate_bytes_per_s = 0.0;
  std::string cache_status;  // "HIT" | "MISS"
};

struct CacheAttempt {
  std::string cache_id;
  std::string outcome;  // "connect-failed", "500", ...
};

enum class DeliveryFailure { Auth, NotFound, Exhausted };

class DeliveryError : public std::runtime_error {
 public:
  DeliveryError(DeliveryFailure kind, int code,
                std::vector<CacheAttempt> attempts, const std::string& what)
      : std::runtime_error(what),
        kind_(kind),
        code_(code),
        attempts_(std::move(attempts)) {}

  DeliveryFailure kind() const { return kind_; }
  int code() const { return code_; }
  const std::vector<CacheAttempt>& attempts() const { return attempts_; }

 private:
  DeliveryFailure kind_;
  int code_;  // response code for Auth/NotFound, 0 for Exhausted
  std::vector<CacheAttempt> attempts_;
};

/// One GET against one specific cache.
inline Response fetch_via(const HostPort& cache_endpoint,
                          const std::string& path,
                          const std::optional<std::string>& token,
                          int timeout_ms = 5000) {
  Request req;
  req.method = Method::Get;
  req.path = path;
  if (token) req.headers.emplace_back("Authorization", *token);
  return send_request(cache_endpoint, req, timeout_ms);
}

/// Tries caches in nearest-first order. Connection failures and 500s move
/// on to the next cache; a 4xx stops immediately — authorization or
/// absence will not improve elsewhere.
inline FetchResult fetch(const FederationTopology& topology,
                         const std::string& path, const FetchOptions& options) {
  if (topology.caches.empty()) {
    throw InputError("fetch: topology has no caches");
  }
  std::vector<std::string> order = nearest_caches(options.at, topology.caches);
  std::vector<CacheAttempt> attempts;
  for (const auto& id : order) {
    const CacheSpec* cache = topology.find_cache(id);
    double started = steady_seconds();
    Response resp;
    try {
      resp = fetch_via(cache->endpoint, path, options.token,
                       options.read_timeout_ms);
    } catch (const std::exception& e) {
      attempts.push_back({id, std::string("connection: ") + e.what()});
      continue;
    }
    if (resp.code == 200) {
      double elapsed = std::max(steady_seconds() - started, 1e-6);
      FetchResult result;
      result.body = std::move(resp.body);
      result.served_by = id;
      result.rate_bytes_per_s = double(result.body.size()) / elapsed;
      auto status = get_header(resp.headers, "X-Cache");
      result.cache_status = status ? std::string(*status) : "MISS";
      return result;
    }
    if (resp.code == 401 || resp.code == 403) {
      attempts.push_back({id, std::to_string(resp.code)});
      throw DeliveryError(DeliveryFailure::Auth, resp.code, std::move(attempts),
                          "denied with " + std::to_string(resp.code) +
                              " by cache " + id);
    }
    if (resp.code == 404) {
      attempts.push_back({id, "404"});
      throw DeliveryError(DeliveryFailure::NotFound, 404, std::move(attempts),
                          path + " not found via cache " + id);
    }
    attempts.push_back({id, std::to_string(resp.code)});
  }
  std::string detail = "all caches failed for " + path + ":";
  for (const auto& a : attempts) detail += " " + a.cache_id + "=" + a.outcome;
  throw DeliveryError(DeliveryFailure::Exhausted, 0, std::move(attempts),
                      detail);
}

}  // namespace minifed
