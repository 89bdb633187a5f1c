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

#include <cstring>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "minifed/client.hpp"
#include "minifed/clock.hpp"
#include "minifed/encoding.hpp"
#include "minifed/geo.hpp"
#include "minifed/net.hpp"
#include "minifed/token.hpp"
#include "minifed/topology.hpp"

namespace minifed {

enum class CheckId {
  AuthAccess,
  UnauthDenied,
  ShovelerThroughput,
  ShovelerQueue,
  CopyPublic,
  CopyPrivate,
  TransferRate,
  ServiceLoad,
  RedirectorAlive,
};

inline const char* to_string(CheckId id) {
  switch (id) {
    case CheckId::AuthAccess: return "auth_access";
    case CheckId::UnauthDenied: return "unauth_denied";
    case CheckId::ShovelerThroughput: return "shoveler_throughput";
    case CheckId::ShovelerQueue: return "shoveler_queue";
    case CheckId::CopyPublic: return "copy_public";
    case CheckId::CopyPrivate: return "copy_private";
    case CheckId::TransferRate: return "transfer_rate";
    case CheckId::ServiceLoad: return "service_load";
    case CheckId::RedirectorAlive: return "redirector_alive";
  }
  return "unknown";
}

inline std::optional<CheckId> check_id_from_string(std::string_view s) {
  if (s == "auth_access") return CheckId::AuthAccess;
  if (s == "unauth_denied") return CheckId::UnauthDenied;
  if (s == "shoveler_throughput") return CheckId::ShovelerThroughput;
  if (s == "shoveler_queue") return CheckId::ShovelerQueue;
  if (s == "copy_public") return CheckId::CopyPublic;
  if (s == "copy_private") return CheckId::CopyPrivate;
  if (s == "transfer_rate") return CheckId::TransferRate;
  if (s == "service_load") return CheckId::ServiceLoad;
  if (s == "redirector_alive") return CheckId::RedirectorAlive;
  return std::nullopt;
}

enum class CheckStatus { Ok, Warn, Crit };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Ok: return "OK";
    case CheckStatus::Warn: return "WARN";
    case CheckStatus::Crit: return "CRIT";
  }
  return "?";
}

struct CheckResult {
  CheckId id = CheckId::RedirectorAlive;
  std::string target;
  CheckStatus status = CheckStatus::Crit;
  std::map<std::string, double> metrics;
  std::string detail;
  uint64_t duration_ms = 0;
};

struct HealthReport {
  int64_t started_at_ms = 0;
  std::vector<CheckResult> results;

  std::size_t count(CheckStatus s) const {
    std::size_t n = 0;
    for (const auto& r : results)
      if (r.status == s) ++n;
    return n;
  }
  bool any_crit() const { return count(CheckStatus::Crit) > 0; }
};

struct CheckSpec {
  CheckId id = CheckId::RedirectorAlive;
  std::string target;
  nlohmann::json params = nlohmann::json::object();
};

// Default thresholds; every one of these is overridable per check via its
// params object. Rates use decimal megabytes (1 MB = 1e6 bytes).
struct CheckDefaults {
  double queue_warn_fraction = 0.5;
  double queue_crit_fraction = 0.9;
  double rate_near_mb_s = 5.0;   // < 500 km
  double rate_mid_mb_s = 2.0;    // 500–3000 km
  double rate_far_mb_s = 1.0;    // > 3000 km
  double load_max_active = 100;
  int timeout_ms = 5000;
};

struct SuiteConfig {
  Coord client_location{0.0, 0.0};
  std::optional<HostPort> shoveler_admin;
  CheckDefaults defaults;
  std::vector<CheckSpec> checks;
};

inline SuiteConfig suite_config_from_json(const nlohmann::json& j) {
  SuiteConfig cfg;
  if (j.contains("client_location")) {
    cfg.client_location.lat = j["client_location"].at("lat").get<double>();
    cfg.client_location.lon = j["client_location"].at("lon").get<double>();
  }
  if (j.contains("shoveler_admin")) {
    auto hp = parse_host_port(j["shoveler_admin"].get<std::string>());
    if (!hp) throw ConfigError("suite: bad shoveler_admin");
    cfg.shoveler_admin = *hp;
  }
  for (const auto& jc : j.at("checks")) {
    CheckSpec spec;
    auto id = check_id_from_string(jc.at("check").get<std::string>());
    if (!id) {
      throw ConfigError("suite: unknown check " +
                        jc.at("check").get<std::string>());
    }
    spec.id = *id;
    spec.target = jc.value("target", "");
    spec.params = jc.value("params", nlohmann::json::object());
    cfg.checks.push_back(std::move(spec));
  }
  return cfg;
}

inline nlohmann::json report_to_json(const HealthReport& report) {
  nlohmann::json results = nlohmann::json::array();
  for (const auto& r : report.results) {
    results.push_back({{"check_id", to_string(r.id)},
                       {"target", r.target},
                       {"status", to_string(r.status)},
                       {"metrics", r.metrics},
                       {"detail", r.detail},
                       {"duration_ms", r.duration_ms}});
  }
  return {{"started_at_ms", report.started_at_ms},
          {"results", results},
          {"summary",
           {{"ok", report.count(CheckStatus::Ok)},
            {"warn", report.count(CheckStatus::Warn)},
            {"crit", report.count(CheckStatus::Crit)}}}};
}

inline std::string report_to_text(const HealthReport& report) {
  std::ostringstream out;
  for (const auto& r : report.results) {
    out << to_string(r.status);
    for (std::size_t i = std::strlen(to_string(r.status)); i < 5; ++i)
      out << ' ';
    std::string name = std::string(to_string(r.id)) +
                       (r.target.empty() ? "" : "@" + r.target);
    out << name;
    for (std::size_t i = name.size(); i < 34; ++i) out << ' ';
    out << r.duration_ms << "ms";
    for (const auto& [k, v] : r.metrics) {
      std::ostringstream num;
      num << v;
      out << " " << k << "=" << num.str();
    }
    if (!r.detail.empty()) out << "  (" << r.detail << ")";
    out << "\n";
  }
  out << "summary: ok=" << report.count(CheckStatus::Ok)
      << " warn=" << report.count(CheckStatus::Warn)
      << " crit=" << report.count(CheckStatus::Crit) << "\n";
  return out.str();
}

/// Runs the §-style probe checks against a live federation. Independent
/// checks execute concurrently; results land in config order. The runner
/// itself only ever touches probe-namespace objects.
class HealthRunner {
 public:
  HealthRunner(FederationTopology topology, SuiteConfig config)
      : topology_(std::move(topology)), config_(std::move(config)) {}

  HealthReport run_suite() {
    HealthReport report;
    report.started_at_ms = now_unix_ms();
    std::vector<std::future<CheckResult>> futures;
    futures.reserve(config_.checks.size());
    for (const auto& spec : config_.checks) {
      futures.push_back(std::async(std::launch::async, [this, &spec] {
        return run_check(spec);
      }));
    }
    for (auto& f : futures) report.results.push_back(f.get());
    return report;
  }

  CheckResult run_check(const CheckSpec& spec) {
    CheckResult result;
    result.id = spec.id;
    result.target = spec.target;
    int64_t started = steady_ms();
    try {
      switch (spec.id) {
        case CheckId::AuthAccess: check_auth_access(spec, result); break;
        case CheckId::UnauthDenied: check_unauth_denied(spec, result); break;
        case CheckId::ShovelerThroughput:
          check_shoveler_throughput(spec, result);
          break;
        case CheckId::ShovelerQueue: check_shoveler_queue(spec, result); break;
        case CheckId::CopyPublic: check_copy(spec, result, false); break;
        case CheckId::CopyPrivate: check_copy(spec, result, true); break;
        case CheckId::TransferRate: check_transfer_rate(spec, result); break;
        case CheckId::ServiceLoad: check_service_load(spec, result); break;
        case CheckId::RedirectorAlive:
          check_redirector_alive(spec, result);
          break;
      }
    } catch (const std::exception& e) {
      result.status = CheckStatus::Crit;
      result.detail = e.what();
    }
    result.duration_ms = uint64_t(steady_ms() - started);
    return result;
  }

 private:
  const CacheSpec& target_cache(const CheckSpec& spec) const {
    const CacheSpec* cache = topology_.find_cache(spec.target);
    if (!cache) throw ConfigError("no such cache: " + spec.target);
    return *cache;
  }

  const NamespaceSpec& namespace_of(const std::string& path) const {
    const NamespaceSpec* ns = resolve_namespace(path, topology_.namespaces);
    if (!ns) throw ConfigError("probe path outside every namespace: " + path);
    return *ns;
  }

  std::string fresh_token(const NamespaceSpec& ns,
                          const std::string& scope_prefix) const {
    return mint_token("healthcheck", {std::string(kScopePrefix) + scope_prefix},
                      now_unix_s() + 300, ns.secret);
  }

  int timeout(const CheckSpec& spec) const {
    return spec.params.value("timeout_ms", config_.defaults.timeout_ms);
  }

  void check_auth_access(const CheckSpec& spec, CheckResult& out) {
    const CacheSpec& cache = target_cache(spec);
    std::string path = spec.params.at("path").get<std::string>();
    const NamespaceSpec& ns = namespace_of(path);
    if (ns.is_public) {
      out.status = CheckStatus::Crit;
      out.detail = "probe path is not protected";
      return;
    }
    Response r = fetch_via(cache.endpoint, path, fresh_token(ns, ns.prefix),
                           timeout(spec));
    out.metrics["code"] = r.code;
    out.metrics["bytes"] = double(r.body.size());
    if (r.code == 200) {
      out.status = CheckStatus::Ok;
    } else {
      out.status = CheckStatus::Crit;
      out.detail = "expected 200 with fresh token, got " +
                   std::to_string(r.code);
    }
  }

  void check_unauth_denied(const CheckSpec& spec, CheckResult& out) {
    const CacheSpec& cache = target_cache(spec);
    std::string path = spec.params.at("path").get<std::string>();
    const NamespaceSpec& ns = namespace_of(path);
    std::string wrong_scope =
        spec.params.value("wrong_scope", std::string("/_nowhere"));

    Response no_token =
        fetch_via(cache.endpoint, path, std::nullopt, timeout(spec));
    Response bad_scope = fetch_via(cache.endpoint, path,
                                   fresh_token(ns, wrong_scope), timeout(spec));
    out.metrics["code_no_token"] = no_token.code;
    out.metrics["code_wrong_scope"] = bad_scope.code;
    if (no_token.code == 200 || bad_scope.code == 200) {
      out.status = CheckStatus::Crit;
      out.detail = "protected object served without proper credentials";
    } else if (no_token.code == 401 && bad_scope.code == 403) {
      out.status = CheckStatus::Ok;
    } else {
      out.status = CheckStatus::Warn;
      out.detail = "denied, but with unexpected codes";
    }
  }

  nlohmann::json shoveler_stats(const CheckSpec& spec) {
    if (!config_.shoveler_admin) {
      throw ConfigError("suite has no shoveler_admin endpoint");
    }
    Request req;
    req.method = Method::Stats;
    Response r = send_request(*config_.shoveler_admin, req, timeout(spec));
    if (r.code != 200) {
      throw ConnectionError("shoveler STATS returned " +
                            std::to_string(r.code));
    }
    return nlohmann::json::parse(r.body);
  }

  void check_shoveler_throughput(const CheckSpec& spec, CheckResult& out) {
    nlohmann::json stats = shoveler_stats(spec);
    double received = stats.at("received").get<double>();
    out.metrics["received"] = received;
    std::lock_guard lk(state_mu_);
    auto it = last_received_.find(spec.target);
    if (it == last_received_.end()) {
      last_received_[spec.target] = received;
      out.status = CheckStatus::Ok;
      out.detail = "baseline sample";
      return;
    }
    out.metrics["delta"] = received - it->second;
    if (received > it->second) {
      out.status = CheckStatus::Ok;
    } else {
      out.status = CheckStatus::Warn;
      out.detail = "received counter flat since last run";
    }
    it->second = received;
  }

  void check_shoveler_queue(const CheckSpec& spec, CheckResult& out) {
    nlohmann::json stats = shoveler_stats(spec);
    double depth = stats.at("queue_depth").get<double>();
    double bound = stats.at("queue_bound").get<double>();
    double warn_at = spec.params.value(
        "warn_fraction", config_.defaults.queue_warn_fraction);
    double crit_at = spec.params.value(
        "crit_fraction", config_.defaults.queue_crit_fraction);
    out.metrics["queue_depth"] = depth;
    out.metrics["queue_bound"] = bound;
    if (depth >= crit_at * bound) {
      out.status = CheckStatus::Crit;
      out.detail = "queue nearly full";
    } else if (depth >= warn_at * bound) {
      out.status = CheckStatus::Warn;
      out.detail = "queue filling";
    } else {
      out.status = CheckStatus::Ok;
    }
  }

  void check_copy(const CheckSpec& spec, CheckResult& out, bool is_private) {
    const CacheSpec& cache = target_cache(spec);
    std::string path = spec.params.at("path").get<std::string>();
    std::string expected = spec.params.at("sha256").get<std::string>();
    const NamespaceSpec& ns = namespace_of(path);
    std::optional<std::string> token;
    if (is_private) {
      if (ns.is_public) {
        out.status = CheckStatus::Crit;
        out.detail = "copy_private probe path is public";
        return;
      }
      token = fresh_token(ns, ns.prefix);
    }
    Response r = fetch_via(cache.endpoint, path, token, timeout(spec));
    out.metrics["code"] = r.code;
    out.metrics["bytes"] = double(r.body.size());
    if (r.code != 200) {
      out.status = CheckStatus::Crit;
      out.detail = "copy failed with " + std::to_string(r.code);
      return;
    }
    if (sha256_hex(r.body) != expected) {
      out.status = CheckStatus::Crit;
      out.detail = "body digest mismatch";
      return;
    }
    out.status = CheckStatus::Ok;
  }

  void check_transfer_rate(const CheckSpec& spec, CheckResult& out) {
    const CacheSpec& cache = target_cache(spec);
    std::string path = spec.params.at("path").get<std::string>();
    const NamespaceSpec& ns = namespace_of(path);
    std::optional<std::string> token;
    if (!ns.is_public) token = fresh_token(ns, ns.prefix);

    double km = great_circle_km(config_.client_location,
                                Coord{cache.latitude, cache.longitude});
    double threshold_mb = km < 500.0 ? config_.defaults.rate_near_mb_s
                          : km <= 3000.0 ? config_.defaults.rate_mid_mb_s
                                         : config_.defaults.rate_far_mb_s;
    threshold_mb = spec.params.value("threshold_mb_s", threshold_mb);

    double started = steady_seconds();
    Response r = fetch_via(cache.endpoint, path, token, timeout(spec));
    double elapsed = std::max(steady_seconds() - started, 1e-6);
    if (r.code != 200) {
      out.status = CheckStatus::Crit;
      out.detail = "probe fetch failed with " + std::to_string(r.code);
      out.metrics["code"] = r.code;
      return;
    }
    double rate_mb = double(r.body.size()) / elapsed / 1e6;
    out.metrics["rate_mb_s"] = rate_mb;
    out.metrics["distance_km"] = km;
    out.metrics["threshold_mb_s"] = threshold_mb;
    if (rate_mb >= threshold_mb) {
      out.status = CheckStatus::Ok;
    } else if (rate_mb >= threshold_mb / 2.0) {
      out.status = CheckStatus::Warn;
      out.detail = "below rate threshold";
    } else {
      out.status = CheckStatus::Crit;
      out.detail = "below half the rate threshold";
    }
  }

  void check_service_load(const CheckSpec& spec, CheckResult& out) {
    HostPort endpoint;
    if (const CacheSpec* c = topology_.find_cache(spec.target)) {
      endpoint = c->endpoint;
    } else if (const OriginSpec* o = topology_.find_origin(spec.target)) {
      endpoint = o->endpoint;
    } else {
      throw ConfigError("no such service: " + spec.target);
    }
    Request req;
    req.method = Method::Stats;
    Response r = send_request(endpoint, req, timeout(spec));
    if (r.code != 200) {
      out.status = CheckStatus::Crit;
      out.detail = "STATS returned " + std::to_string(r.code);
      return;
    }
    nlohmann::json stats = nlohmann::json::parse(r.body);
    double active = stats.at("active_connections").get<double>();
    double ceiling =
        spec.params.value("max_active", config_.defaults.load_max_active);
    out.metrics["active_connections"] = active;
    out.metrics["max_active"] = ceiling;
    if (active < ceiling) {
      out.status = CheckStatus::Ok;
    } else {
      out.status = CheckStatus::Warn;
      out.detail = "active connections at or above ceiling";
    }
  }

  void check_redirector_alive(const CheckSpec& spec, CheckResult& out) {
    std::string prefix = spec.params.at("prefix").get<std::string>();
    Request req;
    req.method = Method::Locate;
    req.path = prefix;
    Response r = send_request(topology_.redirector, req, timeout(spec));
    out.metrics["code"] = r.code;
    if (r.code == 302) {
      out.status = CheckStatus::Ok;
    } else {
      out.status = CheckStatus::Crit;
      out.detail = "LOCATE " + prefix + " returned " + std::to_string(r.code);
    }
  }

  FederationTopology topology_;
  SuiteConfig config_;
  std::mutex state_mu_;
  std::map<std::string, double> last_received_;
};

}  // namespace minifed
