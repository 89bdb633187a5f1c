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

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "minifed/minifed.hpp"

namespace {

// get/check exit codes, documented in the README.
constexpr int kExitAuth = 3;
constexpr int kExitNotFound = 4;
constexpr int kExitExhausted = 5;
constexpr int kExitCrit = 2;

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

void install_signal_handlers() {
  struct sigaction sa{};
  sa.sa_handler = handle_signal;
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
}

void wait_for_signal() {
  while (!g_stop.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(200));
  }
}

minifed::Coord parse_coord(const std::string& s) {
  std::size_t comma = s.find(',');
  if (comma == std::string::npos) {
    throw CLI::ValidationError("--at", "expected lat,lon");
  }
  try {
    return minifed::Coord{std::stod(s.substr(0, comma)),
                          std::stod(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--at", "expected lat,lon");
  }
}

minifed::HostPort parse_endpoint_flag(const std::string& flag,
                                      const std::string& s) {
  auto hp = minifed::parse_host_port(s);
  if (!hp) throw CLI::ValidationError(flag, "expected host:port");
  return *hp;
}

int run_origin(const std::string& config, const std::string& id,
               const std::string& monitor) {
  minifed::FederationTopology topo = minifed::load_topology(config);
  const minifed::OriginSpec* spec = topo.find_origin(id);
  if (!spec) throw minifed::ConfigError("no origin with id " + id);
  minifed::OriginOptions opts;
  opts.redirector = topo.redirector;
  if (!monitor.empty()) {
    opts.monitor_addr = parse_endpoint_flag("--monitor-addr", monitor);
  }
  minifed::OriginService service(
      *spec, topo.namespaces,
      minifed::TcpListener::bind(spec->endpoint.host, spec->endpoint.port),
      opts);
  service.start();
  std::cerr << "origin " << id << " serving on " << spec->endpoint.host << ":"
            << service.port() << "\n";
  wait_for_signal();
  service.stop();
  return 0;
}

int run_cache(const std::string& config, const std::string& id,
              const std::string& monitor) {
  minifed::FederationTopology topo = minifed::load_topology(config);
  const minifed::CacheSpec* spec = topo.find_cache(id);
  if (!spec) throw minifed::ConfigError("no cache with id " + id);
  minifed::CacheOptions opts;
  if (!monitor.empty()) {
    opts.monitor_addr = parse_endpoint_flag("--monitor-addr", monitor);
  }
  minifed::CacheService service(
      *spec, topo,
      minifed::TcpListener::bind(spec->endpoint.host, spec->endpoint.port),
      opts);
  service.start();
  std::cerr << "cache " << id << " serving on " << spec->endpoint.host << ":"
            << service.port() << "\n";
  wait_for_signal();
  service.stop();
  return 0;
}

int run_redirector(const std::string& config) {
  minifed::FederationTopology topo = minifed::load_topology(config);
  minifed::RedirectorService service(minifed::TcpListener::bind(
      topo.redirector.host, topo.redirector.port));
  service.start();
  std::cerr << "redirector serving on " << topo.redirector.str() << "\n";
  wait_for_signal();
  service.stop();
  return 0;
}

int run_shoveler(const std::string& listen_udp, const std::string& collector,
                 const std::string& admin, std::size_t queue_bound) {
  minifed::HostPort udp = parse_endpoint_flag("--listen-udp", listen_udp);
  minifed::HostPort coll = parse_endpoint_flag("--collector", collector);
  minifed::HostPort adm = parse_endpoint_flag("--admin", admin);
  minifed::ShovelerOptions opts;
  opts.queue_bound = queue_bound;
  minifed::Shoveler service(minifed::UdpSocket::bind(udp.host, udp.port),
                            minifed::TcpListener::bind(adm.host, adm.port),
                            coll, opts);
  service.start();
  std::cerr << "shoveler: udp " << udp.host << ":" << service.udp_port()
            << " → " << coll.str() << ", admin port " << service.admin_port()
            << "\n";
  wait_for_signal();
  service.stop();
  return 0;
}

int run_collector(const std::string& listen, const std::string& log) {
  minifed::HostPort hp = parse_endpoint_flag("--listen", listen);
  minifed::Collector service(minifed::TcpListener::bind(hp.host, hp.port), log);
  service.start();
  std::cerr << "collector on " << hp.host << ":" << service.port()
            << " logging to " << log << "\n";
  wait_for_signal();
  service.stop();
  return 0;
}

int run_report(const std::string& log, const std::string& config,
               const std::string& month, int top, const std::string& metric,
               const std::string& format) {
  minifed::FederationTopology topo = minifed::load_topology(config);
  std::ifstream in(log);
  if (!in) throw minifed::ConfigError("cannot open log: " + log);
  std::optional<std::string> month_filter;
  if (!month.empty()) month_filter = month;
  minifed::AccountingTable table =
      minifed::aggregate(in, topo.namespaces, month_filter);
  if (top > 0) {
    auto parsed = minifed::parse_metric(metric);
    if (!parsed) throw minifed::InputError("metric must be bytes|transfers");
    auto rows = minifed::top_namespaces(table, std::size_t(top), *parsed);
    std::cout << (format == "csv" ? minifed::render_ranked_csv(rows)
                                  : minifed::render_ranked_text(rows));
  } else {
    std::cout << (format == "csv" ? minifed::render_table_csv(table)
                                  : minifed::render_table_text(table));
  }
  if (table.corrupt_lines > 0) {
    std::cerr << "skipped " << table.corrupt_lines << " corrupt line(s)\n";
  }
  return 0;
}

int run_get(const std::string& path, const std::string& config,
            const std::string& token, const std::string& at,
            const std::string& out_file) {
  minifed::FederationTopology topo = minifed::load_topology(config);
  minifed::FetchOptions opts;
  if (!token.empty()) opts.token = token;
  if (!at.empty()) opts.at = parse_coord(at);
  try {
    minifed::FetchResult result = minifed::fetch(topo, path, opts);
    if (!out_file.empty()) {
      std::ofstream out(out_file, std::ios::binary);
      out.write(result.body.data(), std::streamsize(result.body.size()));
      if (!out.good()) throw minifed::ConfigError("cannot write " + out_file);
    } else {
      std::cout.write(result.body.data(),
                      std::streamsize(result.body.size()));
    }
    std::cerr << "served_by=" << result.served_by
              << " cache=" << result.cache_status << " bytes="
              << result.body.size() << " rate="
              << result.rate_bytes_per_s / 1e6 << " MB/s\n";
    return 0;
  } catch (const minifed::DeliveryError& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case minifed::DeliveryFailure::Auth: return kExitAuth;
      case minifed::DeliveryFailure::NotFound: return kExitNotFound;
      case minifed::DeliveryFailure::Exhausted: return kExitExhausted;
    }
    return kExitExhausted;
  }
}

int run_nearest(const std::string& config, const std::string& at) {
  minifed::FederationTopology topo = minifed::load_topology(config);
  minifed::Coord client = parse_coord(at);
  for (const auto& id : minifed::nearest_caches(client, topo.caches)) {
    const minifed::CacheSpec* cache = topo.find_cache(id);
    double km = minifed::great_circle_km(
        client, minifed::Coord{cache->latitude, cache->longitude});
    std::cout << id << " " << km << " km\n";
  }
  return 0;
}

int run_check(const std::string& suite_file, const std::string& topology_file,
              const std::string& format) {
  minifed::FederationTopology topo = minifed::load_topology(topology_file);
  std::ifstream in(suite_file);
  if (!in) throw minifed::ConfigError("cannot open suite: " + suite_file);
  nlohmann::json j;
  in >> j;
  minifed::SuiteConfig cfg = minifed::suite_config_from_json(j);
  minifed::HealthRunner runner(topo, cfg);
  minifed::HealthReport report = runner.run_suite();
  if (format == "json") {
    std::cout << minifed::report_to_json(report).dump(2) << "\n";
  } else {
    std::cout << minifed::report_to_text(report);
  }
  return report.any_crit() ? kExitCrit : 0;
}

int run_demo(uint64_t seed, std::size_t requests) {
  std::cerr << "spawning demo federation (seed " << seed << ")...\n";
  minifed::Federation fed(minifed::demo_options(), seed);
  std::cerr << "running " << requests << " Zipf-distributed fetches...\n";
  auto trace = fed.run_workload(fed.make_zipf_script(requests));
  std::size_t ok = 0;
  for (const auto& e : trace)
    if (e.code == 200) ++ok;
  std::cerr << ok << "/" << trace.size() << " fetches succeeded\n";
  fed.drain_monitoring();

  std::ifstream log(fed.collector_log_path());
  minifed::AccountingTable table =
      minifed::aggregate(log, fed.topology().namespaces);
  std::cout << "── accounting (full table) ──────────────────────\n";
  std::cout << minifed::render_table_text(table);
  std::cout << "── top 3 namespaces by bytes ────────────────────\n";
  std::cout << minifed::render_ranked_text(
      minifed::top_namespaces(table, 3, minifed::RankMetric::Bytes));
  std::cout << "── health report ────────────────────────────────\n";
  minifed::HealthReport report = fed.run_suite_now();
  std::cout << minifed::report_to_text(report);
  return report.any_crit() ? kExitCrit : 0;
}

}  // namespace

int main(int argc, char** argv) {
  install_signal_handlers();
  CLI::App app{"minifed — a desk-scale data federation with monitoring"};
  app.require_subcommand(1);

  std::string config, id, monitor, log_file, listen, collector, admin;
  std::string month, metric = "bytes", format = "text";
  std::string path, token, at, out_file, suite_file, topology_file;
  std::size_t queue_bound = 10'000;
  int top = 0;
  uint64_t seed = 1;
  std::size_t requests = 300;

  CLI::App* origin = app.add_subcommand("origin", "run an origin service");
  origin->add_option("--config", config)->required();
  origin->add_option("--id", id)->required();
  origin->add_option("--monitor-addr", monitor);

  CLI::App* cache = app.add_subcommand("cache", "run a cache service");
  cache->add_option("--config", config)->required();
  cache->add_option("--id", id)->required();
  cache->add_option("--monitor-addr", monitor);

  CLI::App* redirector =
      app.add_subcommand("redirector", "run the redirector");
  redirector->add_option("--config", config)->required();

  CLI::App* shoveler =
      app.add_subcommand("shoveler", "run the monitoring shoveler");
  shoveler->add_option("--listen-udp", listen)->required();
  shoveler->add_option("--collector", collector)->required();
  shoveler->add_option("--admin", admin)->required();
  shoveler->add_option("--queue-bound", queue_bound);

  CLI::App* collector_cmd =
      app.add_subcommand("collector", "run the record collector");
  collector_cmd->add_option("--listen", listen)->required();
  collector_cmd->add_option("--log", log_file)->required();

  CLI::App* report = app.add_subcommand("report", "accounting report");
  report->add_option("--log", log_file)->required();
  report->add_option("--config", config)->required();
  report->add_option("--month", month);
  report->add_option("--top", top);
  report->add_option("--metric", metric)
      ->check(CLI::IsMember({"bytes", "transfers"}));
  report->add_option("--format", format)
      ->check(CLI::IsMember({"text", "csv"}));

  CLI::App* get = app.add_subcommand("get", "fetch one object");
  get->add_option("path", path)->required();
  get->add_option("--config", config)->required();
  get->add_option("--token", token);
  get->add_option("--at", at);
  get->add_option("-o,--output", out_file);

  CLI::App* nearest = app.add_subcommand("nearest", "rank caches by distance");
  nearest->add_option("--config", config)->required();
  nearest->add_option("--at", at)->required();

  CLI::App* check = app.add_subcommand("check", "health checks");
  CLI::App* check_run = check->add_subcommand("run", "run the check suite");
  check_run->add_option("--config", suite_file)->required();
  check_run->add_option("--topology", topology_file)->required();
  check_run->add_option("--format", format)
      ->check(CLI::IsMember({"text", "json"}));

  CLI::App* demo = app.add_subcommand("demo", "self-contained demo");
  demo->add_option("--seed", seed);
  demo->add_option("--requests", requests);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*origin) return run_origin(config, id, monitor);
    if (*cache) return run_cache(config, id, monitor);
    if (*redirector) return run_redirector(config);
    if (*shoveler) return run_shoveler(listen, collector, admin, queue_bound);
    if (*collector_cmd) return run_collector(listen, log_file);
    if (*report) return run_report(log_file, config, month, top, metric, format);
    if (*get) return run_get(path, config, token, at, out_file);
    if (*nearest) return run_nearest(config, at);
    if (*check) {
      if (!*check_run) {
        std::cerr << "usage: minifed check run ...\n";
        return 2;
      }
      return run_check(suite_file, topology_file, format);
    }
    if (*demo) return run_demo(seed, requests);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
