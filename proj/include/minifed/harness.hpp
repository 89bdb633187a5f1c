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

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "minifed/accounting.hpp"
#include "minifed/cache.hpp"
#include "minifed/client.hpp"
#include "minifed/collector.hpp"
#include "minifed/healthcheck.hpp"
#include "minifed/origin.hpp"
#include "minifed/redirector.hpp"
#include "minifed/shoveler.hpp"
#include "minifed/token.hpp"
#include "minifed/topology.hpp"

namespace minifed {

enum class FaultKind {
  KillRedirector,
  KillOrigin,
  KillCache,
  StallCollector,
  FillShovelerQueue,
  CorruptNamespaceSecret,
};

inline std::optional<FaultKind> fault_from_string(std::string_view s) {
  if (s == "kill_redirector") return FaultKind::KillRedirector;
  if (s == "kill_origin") return FaultKind::KillOrigin;
  if (s == "kill_cache") return FaultKind::KillCache;
  if (s == "stall_collector") return FaultKind::StallCollector;
  if (s == "fill_shoveler_queue") return FaultKind::FillShovelerQueue;
  if (s == "corrupt_namespace_secret") return FaultKind::CorruptNamespaceSecret;
  return std::nullopt;
}

struct WorkloadStep {
  int64_t at_ms = 0;
  Coord client{0.0, 0.0};
  std::string path;
  std::optional<std::string> token;
};

struct TraceEntry {
  std::size_t index = 0;
  std::string path;
  int code = 0;
  std::string cache_status;
  uint64_t bytes = 0;
  std::string served_by;
  double rate_bytes_per_s = 0.0;
  std::string error;

  /// Timing-free projection; two runs with one seed must agree on this.
  std::string canonical() const {
    return std::to_string(index) + "|" + path + "|" + std::to_string(code) +
           "|" + cache_status + "|" + std::to_string(bytes) + "|" + served_by;
  }
};

struct FileSeed {
  std::string name;  // path relative to the namespace prefix
  std::size_t size = 0;
};

struct NamespacePlan {
  std::string prefix;
  bool is_public = true;
  std::vector<FileSeed> files;
};

struct CacheSite {
  std::string id;
  double latitude = 0.0;
  double longitude = 0.0;
};

struct HarnessOptions {
  std::vector<NamespacePlan> namespaces;  // probe namespaces are always added
  std::vector<CacheSite> caches{{"cache-sdsc", 32.88, -117.23}};
  uint64_t cache_capacity = 256ull * 1024 * 1024;
  std::size_t queue_bound = 10'000;
  int64_t heartbeat_ms = 2'000;
  int64_t liveness_window_ms = kDefaultLivenessWindowMs;
  int fetch_timeout_ms = 3'000;
  std::size_t rate_probe_bytes = 2'000'000;
  Coord client{32.88, -117.23};  // SDSC, next to the default cache
};

inline constexpr const char* kProbePublicNs = "/_probe";
inline constexpr const char* kProbePrivateNs = "/_probe_private";
inline constexpr const char* kProbeObject = "/_probe/probe.bin";
inline constexpr const char* kProbeRateObject = "/_probe/rate.bin";
inline constexpr const char* kProbePrivateObject = "/_probe_private/probe.bin";

/// A whole federation on loopback, in one process: origin, caches,
/// redirector, shoveler, collector, plus scripted workloads and fault
/// injection. Every synthetic choice (file contents, secrets, scripts)
/// derives from the seed.
class Federation {
 public:
  Federation(HarnessOptions options, uint64_t seed)
      : options_(std::move(options)), rng_(seed) {
    validate_plan();
    root_ = std::filesystem::temp_directory_path() /
            ("minifed-" + std::to_string(::getpid()) + "-" +
             std::to_string(seed) + "-" + std::to_string(instance_counter()++));
    std::filesystem::create_directories(root_);
    try {
      build_world();
      spawn_services();
      wait_ready();
    } catch (...) {
      teardown();
      throw;
    }
  }

  ~Federation() { teardown(); }

  Federation(const Federation&) = delete;
  Federation& operator=(const Federation&) = delete;

  void teardown() {
    if (torn_down_) return;
    torn_down_ = true;
    for (auto& [id, cache] : caches_) cache->stop();
    for (auto& [id, origin] : origins_) origin->stop();
    if (redirector_) redirector_->stop();
    if (shoveler_) shoveler_->stop();
    if (collector_) collector_->stop();
    caches_.clear();
    origins_.clear();
    redirector_.reset();
    shoveler_.reset();
    collector_.reset();
    std::error_code ec;
    std::filesystem::remove_all(root_, ec);
  }

  const FederationTopology& topology() const { return topology_; }
  const std::string& collector_log_path() const { return collector_log_; }
  HostPort shoveler_admin() const {
    return HostPort{"127.0.0.1", shoveler_->admin_port()};
  }
  HostPort shoveler_udp() const {
    return HostPort{"127.0.0.1", shoveler_->udp_port()};
  }
  Shoveler& shoveler() { return *shoveler_; }
  Collector& collector() { return *collector_; }
  OriginService& origin(const std::string& id) { return *origins_.at(id); }
  CacheService& cache(const std::string& id) { return *caches_.at(id); }
  const std::string& default_origin_id() const { return default_origin_id_; }

  std::string probe_digest(const std::string& path) const {
    return digests_.at(path);
  }
  std::string origin_file_content(const std::string& path) const {
    return contents_.at(path);
  }
  std::vector<std::string> object_paths() const {
    std::vector<std::string> paths;
    for (const auto& [p, c] : contents_) paths.push_back(p);
    return paths;
  }

  std::string mint_for(const std::string& prefix,
                       const std::string& subject = "workload",
                       uint64_t ttl_s = 3600) const {
    for (const auto& ns : topology_.namespaces) {
      if (ns.prefix == prefix && !ns.is_public) {
        return mint_token(subject, {std::string(kScopePrefix) + prefix},
                          now_unix_s() + ttl_s, ns.secret);
      }
    }
    throw InputError("no protected namespace " + prefix);
  }

  /// Token for whatever namespace covers `path`, or nothing when public.
  std::optional<std::string> token_for(const std::string& path) const {
    const NamespaceSpec* ns = resolve_namespace(path, topology_.namespaces);
    if (!ns || ns->is_public) return std::nullopt;
    return mint_for(ns->prefix);
  }

  TraceEntry fetch_one(const std::string& path,
                       const std::optional<std::string>& token,
                       std::optional<Coord> from = std::nullopt) {
    TraceEntry entry;
    entry.path = path;
    FetchOptions opts;
    opts.token = token;
    opts.at = from.value_or(options_.client);
    opts.connect_timeout_ms = options_.fetch_timeout_ms;
    opts.read_timeout_ms = options_.fetch_timeout_ms;
    try {
      FetchResult r = fetch(topology_, path, opts);
      entry.code = 200;
      entry.cache_status = r.cache_status;
      entry.bytes = r.body.size();
      entry.served_by = r.served_by;
      entry.rate_bytes_per_s = r.rate_bytes_per_s;
      last_body_ = std::move(r.body);
    } catch (const DeliveryError& e) {
      entry.code = e.code();
      entry.error = e.what();
    } catch (const std::exception& e) {
      entry.error = e.what();
    }
    return entry;
  }

  /// Body of the most recent successful fetch_one (content checks).
  const std::string& last_body() const { return last_body_; }

  std::vector<TraceEntry> run_workload(std::vector<WorkloadStep> script) {
    std::stable_sort(script.begin(), script.end(),
                     [](const WorkloadStep& a, const WorkloadStep& b) {
                       return a.at_ms < b.at_ms;
                     });
    std::vector<TraceEntry> trace;
    trace.reserve(script.size());
    for (std::size_t i = 0; i < script.size(); ++i) {
      TraceEntry e = fetch_one(script[i].path, script[i].token,
                               script[i].client);
      e.index = i;
      trace.push_back(std::move(e));
    }
    return trace;
  }

  /// Zipf(1.0)-distributed script over every seeded object, tokens
  /// attached for protected namespaces.
  std::vector<WorkloadStep> make_zipf_script(std::size_t n_requests) {
    std::vector<std::string> pool = object_paths();
    std::vector<double> weights(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) weights[i] = 1.0 / double(i + 1);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::vector<WorkloadStep> script;
    script.reserve(n_requests);
    for (std::size_t i = 0; i < n_requests; ++i) {
      const std::string& path = pool[pick(rng_)];
      script.push_back(WorkloadStep{int64_t(i), options_.client, path,
                                    token_for(path)});
    }
    return script;
  }

  /// Blocks until the shoveler queue is empty and counters are stable, so
  /// the collector log reflects everything that reached the pipeline.
  bool drain_monitoring(int64_t timeout_ms = 15'000) {
    int64_t deadline = steady_ms() + timeout_ms;
    ShovelerCounters prev = shoveler_->counters();
    int stable = 0;
    while (steady_ms() < deadline) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      ShovelerCounters now = shoveler_->counters();
      if (now.queue_depth == 0 && now == prev) {
        if (++stable >= 3) return true;
      } else {
        stable = 0;
      }
      prev = now;
    }
    return false;
  }

  std::vector<MonitorRecord> read_collector_log() const {
    std::vector<MonitorRecord> out;
    std::ifstream in(collector_log_);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        out.push_back(decode_monitor_record(line));
      } catch (const ProtocolError&) {
      }
    }
    return out;
  }

  // ── Fault injection ────────────────────────────────────────────────

  void inject_fault(FaultKind kind, const std::string& id = "") {
    switch (kind) {
      case FaultKind::KillRedirector:
        redirector_->stop();
        return;
      case FaultKind::KillOrigin:
        origins_.at(id.empty() ? default_origin_id_ : id)->stop();
        return;
      case FaultKind::KillCache:
        caches_.at(id.empty() ? options_.caches.front().id : id)->stop();
        return;
      case FaultKind::StallCollector:
        collector_->set_stalled(true);
        return;
      case FaultKind::FillShovelerQueue: {
        shoveler_->pause_drain(true);
        std::size_t target =
            std::size_t(double(options_.queue_bound) * 0.95) + 1;
        for (std::size_t i = 0; i < target; ++i) {
          shoveler_->inject(synthetic_record(i));
        }
        return;
      }
      case FaultKind::CorruptNamespaceSecret: {
        std::string prefix = id.empty() ? kProbePrivateNs : id;
        for (const auto& ns : topology_.namespaces) {
          if (ns.prefix == prefix) saved_secrets_[prefix] = ns.secret;
        }
        for (auto& [cid, cache] : caches_) {
          cache->set_namespace_secret(prefix, "corrupted-secret");
        }
        for (auto& [oid, origin] : origins_) {
          origin->set_namespace_secret(prefix, "corrupted-secret");
        }
        return;
      }
    }
    throw InputError("unknown fault kind");
  }

  /// Clears a soft fault. Killed services stay dead for this federation's
  /// lifetime; spawn a fresh one to recover.
  void clear_fault(FaultKind kind, const std::string& id = "") {
    switch (kind) {
      case FaultKind::StallCollector:
        collector_->set_stalled(false);
        return;
      case FaultKind::FillShovelerQueue:
        shoveler_->pause_drain(false);
        return;
      case FaultKind::CorruptNamespaceSecret: {
        std::string prefix = id.empty() ? kProbePrivateNs : id;
        auto it = saved_secrets_.find(prefix);
        if (it == saved_secrets_.end()) return;
        for (auto& [cid, cache] : caches_) {
          cache->set_namespace_secret(prefix, it->second);
        }
        for (auto& [oid, origin] : origins_) {
          origin->set_namespace_secret(prefix, it->second);
        }
        return;
      }
      case FaultKind::KillRedirector:
      case FaultKind::KillOrigin:
      case FaultKind::KillCache:
        throw InputError("kill faults cannot be cleared in place");
    }
  }

  /// Check/target pairs expected to go non-OK under a fault; everything
  /// else must stay OK. This is the fault matrix the suite is graded on.
  bool expected_non_ok(FaultKind kind, const std::string& fault_id,
                       CheckId check, const std::string& target) const {
    std::string cache_id =
        fault_id.empty() ? options_.caches.front().id : fault_id;
    std::string origin_id = fault_id.empty() ? default_origin_id_ : fault_id;
    switch (kind) {
      case FaultKind::KillRedirector:
        return check == CheckId::RedirectorAlive;
      case FaultKind::KillOrigin:
        return check == CheckId::ServiceLoad && target == origin_id;
      case FaultKind::KillCache:
        return target == cache_id;
      case FaultKind::StallCollector:
      case FaultKind::FillShovelerQueue:
        return check == CheckId::ShovelerQueue;
      case FaultKind::CorruptNamespaceSecret:
        return check == CheckId::AuthAccess || check == CheckId::CopyPrivate;
    }
    return false;
  }

  // ── Health suite plumbing ──────────────────────────────────────────

  SuiteConfig make_suite_config() const {
    SuiteConfig cfg;
    cfg.client_location = options_.client;
    cfg.shoveler_admin = shoveler_admin();
    cfg.checks.push_back(
        {CheckId::RedirectorAlive, "redirector",
         nlohmann::json{{"prefix", kProbePublicNs}}});
    for (const auto& site : options_.caches) {
      cfg.checks.push_back({CheckId::AuthAccess, site.id,
                            nlohmann::json{{"path", kProbePrivateObject}}});
      cfg.checks.push_back({CheckId::UnauthDenied, site.id,
                            nlohmann::json{{"path", kProbePrivateObject}}});
      cfg.checks.push_back(
          {CheckId::CopyPublic, site.id,
           nlohmann::json{{"path", kProbeObject},
                          {"sha256", digests_.at(kProbeObject)}}});
      cfg.checks.push_back(
          {CheckId::CopyPrivate, site.id,
           nlohmann::json{{"path", kProbePrivateObject},
                          {"sha256", digests_.at(kProbePrivateObject)}}});
      cfg.checks.push_back({CheckId::TransferRate, site.id,
                            nlohmann::json{{"path", kProbeRateObject}}});
      cfg.checks.push_back({CheckId::ServiceLoad, site.id,
                            nlohmann::json::object()});
    }
    cfg.checks.push_back({CheckId::ServiceLoad, default_origin_id_,
                          nlohmann::json::object()});
    cfg.checks.push_back(
        {CheckId::ShovelerThroughput, "shoveler", nlohmann::json::object()});
    cfg.checks.push_back(
        {CheckId::ShovelerQueue, "shoveler", nlohmann::json::object()});
    return cfg;
  }

  /// One-shot suite run with a fresh runner (no throughput history).
  HealthReport run_suite_now() {
    HealthRunner runner(topology_, make_suite_config());
    return runner.run_suite();
  }

 private:
  static std::atomic<std::size_t>& instance_counter() {
    static std::atomic<std::size_t> n{0};
    return n;
  }

  void validate_plan() {
    for (const auto& plan : options_.namespaces) {
      if (!is_valid_namespace_prefix(plan.prefix)) {
        throw ConfigError("harness: bad namespace prefix " + plan.prefix);
      }
      if (plan.prefix == kProbePublicNs || plan.prefix == kProbePrivateNs) {
        throw ConfigError("harness: probe namespaces are reserved");
      }
    }
    if (options_.caches.empty()) {
      throw ConfigError("harness: at least one cache required");
    }
  }

  std::string random_bytes(std::size_t n) {
    std::string out(n, '\0');
    std::uniform_int_distribution<int> byte(0, 255);
    for (auto& c : out) c = char(byte(rng_));
    return out;
  }

  MonitorRecord synthetic_record(std::size_t i) {
    MonitorRecord r;
    r.stream = Stream::G;
    r.ts_ms = now_unix_ms();
    r.host = "synthetic";
    r.component = "cache";
    r.event = RecordEvent::Hit;
    r.path = std::string(kProbeObject);
    r.bytes = 1;
    r.client = "fault-injector";
    r.xfer_id = "synthetic-" + std::to_string(now_unix_ms()) + "-" +
                std::to_string(i);
    return r;
  }

  void build_world() {
    std::vector<NamespacePlan> plans = options_.namespaces;
    plans.push_back(NamespacePlan{
        kProbePublicNs,
        true,
        {{"probe.bin", 4096}, {"rate.bin", options_.rate_probe_bytes}}});
    plans.push_back(
        NamespacePlan{kProbePrivateNs, false, {{"probe.bin", 4096}}});

    default_origin_id_ = "origin-sdsc";
    std::filesystem::path origin_root = root_ / "origin-sdsc";
    OriginSpec origin;
    origin.id = default_origin_id_;
    origin.endpoint = HostPort{"127.0.0.1", 0};
    origin.root_dir = origin_root.string();

    for (const auto& plan : plans) {
      NamespaceSpec ns;
      ns.prefix = plan.prefix;
      ns.is_public = plan.is_public;
      if (!plan.is_public) ns.secret = random_bytes(32);
      topology_.namespaces.push_back(ns);
      origin.namespaces.push_back(plan.prefix);

      std::filesystem::path dir = origin_root;
      dir += plan.prefix;
      std::filesystem::create_directories(dir);
      for (const auto& seed : plan.files) {
        std::string path = plan.prefix + "/" + seed.name;
        std::string content = random_bytes(seed.size);
        std::filesystem::path file = dir / seed.name;
        std::filesystem::create_directories(file.parent_path());
        std::ofstream f(file, std::ios::binary);
        f.write(content.data(), std::streamsize(content.size()));
        digests_[path] = sha256_hex(content);
        contents_[path] = std::move(content);
      }
    }
    topology_.origins.push_back(origin);

    for (const auto& site : options_.caches) {
      CacheSpec cache;
      cache.id = site.id;
      cache.endpoint = HostPort{"127.0.0.1", 0};
      cache.latitude = site.latitude;
      cache.longitude = site.longitude;
      cache.capacity_bytes = options_.cache_capacity;
      cache.disk_dir = (root_ / ("cache-" + site.id)).string();
      topology_.caches.push_back(cache);
    }
    collector_log_ = (root_ / "records.log").string();
  }

  void spawn_services() {
    collector_ = std::make_unique<Collector>(
        TcpListener::bind("127.0.0.1", 0), collector_log_);
    collector_->start();
    collector_port_ = collector_->port();

    ShovelerOptions shoveler_opts;
    shoveler_opts.queue_bound = options_.queue_bound;
    shoveler_ = std::make_unique<Shoveler>(
        UdpSocket::bind("127.0.0.1", 0), TcpListener::bind("127.0.0.1", 0),
        HostPort{"127.0.0.1", collector_port_}, shoveler_opts);
    shoveler_->start();

    redirector_ = std::make_unique<RedirectorService>(
        TcpListener::bind("127.0.0.1", 0), options_.liveness_window_ms);
    redirector_->start();
    topology_.redirector = HostPort{"127.0.0.1", redirector_->port()};

    HostPort monitor = shoveler_udp();
    for (auto& origin_spec : topology_.origins) {
      OriginOptions opts;
      opts.monitor_addr = monitor;
      opts.redirector = topology_.redirector;
      opts.heartbeat_ms = options_.heartbeat_ms;
      auto service = std::make_unique<OriginService>(
          origin_spec, topology_.namespaces, TcpListener::bind("127.0.0.1", 0),
          opts);
      origin_spec.endpoint = HostPort{"127.0.0.1", service->port()};
      origins_[origin_spec.id] = std::move(service);
    }
    for (auto& [id, service] : origins_) service->start();

    validate_topology(topology_);  // before caches read it

    for (auto& cache_spec : topology_.caches) {
      CacheOptions opts;
      opts.monitor_addr = monitor;
      opts.fetch_timeout_ms = options_.fetch_timeout_ms;
      auto service = std::make_unique<CacheService>(
          cache_spec, topology_, TcpListener::bind("127.0.0.1", 0), opts);
      cache_spec.endpoint = HostPort{"127.0.0.1", service->port()};
      caches_[cache_spec.id] = std::move(service);
    }
    for (auto& [id, service] : caches_) service->start();
  }

  void wait_ready() {
    // Ready means: the redirector routes the probe namespace and every
    // service answers STATS.
    int64_t deadline = steady_ms() + 5000;
    Request locate;
    locate.method = Method::Locate;
    locate.path = kProbeObject;
    while (steady_ms() < deadline) {
      try {
        Response r = send_request(topology_.redirector, locate, 500);
        if (r.code == 302) break;
      } catch (const std::exception&) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    Request stats;
    stats.method = Method::Stats;
    for (const auto& cache_spec : topology_.caches) {
      send_request(cache_spec.endpoint, stats, 1000);
    }
    for (const auto& origin_spec : topology_.origins) {
      send_request(origin_spec.endpoint, stats, 1000);
    }
    send_request(shoveler_admin(), stats, 1000);
  }

  HarnessOptions options_;
  std::mt19937_64 rng_;
  std::filesystem::path root_;
  FederationTopology topology_;
  std::string collector_log_;
  std::string default_origin_id_;
  uint16_t collector_port_ = 0;
  std::map<std::string, std::string> digests_;   // object path → sha256 hex
  std::map<std::string, std::string> contents_;  // object path → bytes
  std::map<std::string, std::string> saved_secrets_;
  std::string last_body_;
  std::unique_ptr<Collector> collector_;
  std::unique_ptr<Shoveler> shoveler_;
  std::unique_ptr<RedirectorService> redirector_;
  std::map<std::string, std::unique_ptr<OriginService>> origins_;
  std::map<std::string, std::unique_ptr<CacheService>> caches_;
  bool torn_down_ = false;
};

/// Demo world: the five project namespaces from the published accounting
/// tables, a handful of files each.
inline HarnessOptions demo_options() {
  HarnessOptions options;
  auto files = [](std::size_t count, std::size_t base) {
    std::vector<FileSeed> out;
    for (std::size_t i = 0; i < count; ++i) {
      out.push_back({"f" + std::to_string(i) + ".dat", base * (i + 1)});
    }
    return out;
  };
  options.namespaces = {
      {"/ligo", false, files(8, 3000)},   {"/nova", true, files(6, 2000)},
      {"/minerva", true, files(5, 1500)}, {"/dune", true, files(6, 2500)},
      {"/uboone", true, files(4, 1000)},
  };
  return options;
}

}  // namespace minifed
