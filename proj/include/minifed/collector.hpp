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
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_set>

#include "minifed/net.hpp"
#include "minifed/records.hpp"
#include "minifed/wire.hpp"

namespace minifed {

struct CollectorCounters {
  uint64_t stored = 0;
  uint64_t duplicates = 0;
  uint64_t rejected = 0;
};

/// Validates forwarded records and appends the canonical JSON, one line
/// per record, to an append-only log. Every frame is acked — including
/// duplicates and poison — so the shoveler never spins on one message.
/// The dedup set is rebuilt from the log at startup, which is what makes
/// at-least-once delivery safe across collector restarts.
class Collector {
 public:
  Collector(TcpListener listener, std::string log_path)
      : log_path_(std::move(log_path)), listener_(std::move(listener)) {
    reload_dedup();
    log_.open(log_path_, std::ios::app);
    if (!log_) throw ConfigError("cannot open record log: " + log_path_);
  }

  ~Collector() { stop(); }

  void start() {
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  void stop() {
    bool expected = false;
    if (!stopped_.compare_exchange_strong(expected, true)) return;
    stop_.signal();
    if (accept_thread_.joinable()) accept_thread_.join();
    std::unique_lock lk(conn_mu_);
    idle_cv_.wait_for(lk, std::chrono::seconds(10),
                      [this] { return live_conns_ == 0; });
    std::lock_guard llk(log_mu_);
    log_.flush();
  }

  uint16_t port() const { return listener_.port(); }
  const std::string& log_path() const { return log_path_; }

  /// Stalled: accepts connections but neither reads nor acks, so unacked
  /// records pile up in the shovelers.
  void set_stalled(bool stalled) { stalled_.store(stalled); }

  CollectorCounters counters() const {
    std::lock_guard lk(log_mu_);
    return counters_;
  }

 private:
  void accept_loop() {
    while (auto conn = listener_.accept(stop_)) {
      {
        std::lock_guard lk(conn_mu_);
        ++live_conns_;
      }
      std::thread(&Collector::serve, this, std::move(*conn)).detach();
    }
  }

  void serve(TcpStream conn) {
    conn.set_timeouts(100, 5000);
    while (!stop_.signalled()) {
      if (stalled_.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
        continue;
      }
      try {
        std::string payload = read_frame(conn);
        handle_payload(payload);
        conn.write_all(std::string(1, kFrameAck));
      } catch (const TimeoutError&) {
        continue;  // idle; poll stop/stall again
      } catch (const std::exception&) {
        break;  // dead peer or framing violation
      }
    }
    std::lock_guard lk(conn_mu_);
    if (--live_conns_ == 0) idle_cv_.notify_all();
  }

  // First header byte waits in short slices; once a frame starts, switch
  // to the full timeout so a mid-frame pause is a peer problem, not ours.
  std::string read_frame(TcpStream& conn) {
    char first = 0;
    if (!conn.read_byte(first)) throw ConnectionError("peer closed");
    conn.set_timeouts(5000, 5000);
    std::string header(1, first);
    conn.read_exact(header, 3);
    uint32_t n = frame_declared_len(header.data());
    std::string payload;
    payload.reserve(n);
    conn.read_exact(payload, n);
    conn.set_timeouts(100, 5000);
    return payload;
  }

  void handle_payload(const std::string& payload) {
    MonitorRecord record;
    std::string canonical;
    try {
      record = decode_monitor_record(payload);
      canonical = encode_monitor_record(record);
    } catch (const ProtocolError&) {
      std::lock_guard lk(log_mu_);
      ++counters_.rejected;
      return;  // poison: acked but never retried into the log
    }
    std::lock_guard lk(log_mu_);
    if (!seen_.insert(dedup_key(record)).second) {
      ++counters_.duplicates;
      return;
    }
    log_ << canonical << '\n';
    log_.flush();
    ++counters_.stored;
  }

  void reload_dedup() {
    std::ifstream in(log_path_);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        seen_.insert(dedup_key(decode_monitor_record(line)));
      } catch (const ProtocolError&) {
        // Corrupt line; aggregation skips it too.
      }
    }
  }

  std::string log_path_;
  TcpListener listener_;
  StopEvent stop_;
  std::atomic<bool> stopped_{false};
  std::atomic<bool> stalled_{false};
  std::thread accept_thread_;
  std::mutex conn_mu_;
  std::condition_variable idle_cv_;
  int live_conns_ = 0;
  mutable std::mutex log_mu_;
  std::ofstream log_;
  std::unordered_set<std::string> seen_;
  CollectorCounters counters_;
};

}  // namespace minifed
