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
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>

#include <json.hpp>

#include "minifed/clock.hpp"
#include "minifed/net.hpp"
#include "minifed/records.hpp"
#include "minifed/server.hpp"
#include "minifed/wire.hpp"

namespace minifed {

struct ShovelerCounters {
  uint64_t received = 0;
  uint64_t forwarded = 0;
  uint64_t dropped = 0;
  uint64_t queue_depth = 0;
  uint64_t malformed = 0;  // undecodable datagrams; not part of `received`

  // received = forwarded + dropped + queue_depth at every observation.
  friend bool operator==(const ShovelerCounters&,
                         const ShovelerCounters&) = default;
};

/// Bounded FIFO with drop-oldest overflow. All counter updates happen
/// under the same lock as the queue itself, so any snapshot satisfies the
/// conservation invariant exactly.
class RecordQueue {
 public:
  explicit RecordQueue(std::size_t bound) : bound_(bound) {}

  void push(std::string payload) {
    {
      std::lock_guard lk(mu_);
      ++counters_.received;
      if (q_.size() >= bound_) {
        q_.pop_front();
        ++counters_.dropped;
      }
      q_.emplace_back(next_seq_++, std::move(payload));
      counters_.queue_depth = q_.size();
    }
    cv_.notify_one();
  }

  void note_malformed() {
    std::lock_guard lk(mu_);
    ++counters_.malformed;
  }

  std::optional<std::pair<uint64_t, std::string>> front() const {
    std::lock_guard lk(mu_);
    if (q_.empty()) return std::nullopt;
    return q_.front();
  }

  /// Removes the front record iff it is still the one that was sent
  /// (overflow may have dropped it while the ack was in flight).
  void pop_acked(uint64_t seq) {
    std::lock_guard lk(mu_);
    if (!q_.empty() && q_.front().first == seq) {
      q_.pop_front();
      ++counters_.forwarded;
      counters_.queue_depth = q_.size();
    }
  }

  bool wait_nonempty(std::chrono::milliseconds timeout) const {
    std::unique_lock lk(mu_);
    return cv_.wait_for(lk, timeout, [this] { return !q_.empty(); });
  }

  ShovelerCounters snapshot() const {
    std::lock_guard lk(mu_);
    return counters_;
  }

  std::size_t bound() const { return bound_; }

 private:
  std::size_t bound_;
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::deque<std::pair<uint64_t, std::string>> q_;
  uint64_t next_seq_ = 0;
  ShovelerCounters counters_;
};

struct ShovelerOptions {
  std::size_t queue_bound = 10'000;
  int64_t backoff_initial_ms = 500;  // doubles per failure, capped below
  int64_t backoff_cap_ms = 30'000;
  int ack_timeout_ms = 5'000;
  int connect_timeout_ms = 1'000;
};

/// UDP ingest → bounded queue → framed TCP to the collector. A record
/// leaves the queue only after its 0x06 ack, so a collector crash loses
/// nothing that still fits in the queue; the collector deduplicates the
/// resends that ack loss can cause.
class Shoveler {
 public:
  Shoveler(UdpSocket udp, TcpListener admin_listener, HostPort collector,
           ShovelerOptions options = {})
      : options_(options),
        collector_(std::move(collector)),
        queue_(options.queue_bound),
        udp_(std::move(udp)),
        admin_(std::move(admin_listener),
               [this](const Request& req, ProtocolServer::Context& ctx) {
                 return handle_admin(req, ctx);
               }) {}

  ~Shoveler() { stop(); }

  void start() {
    admin_.start();
    ingest_thread_ = std::thread([this] { ingest_loop(); });
    drain_thread_ = std::thread([this] { drain_loop(); });
  }

  void stop() {
    bool expected = false;
    if (!stopped_.compare_exchange_strong(expected, true)) return;
    stop_.signal();
    if (ingest_thread_.joinable()) ingest_thread_.join();
    if (drain_thread_.joinable()) drain_thread_.join();
    admin_.stop();
  }

  uint16_t udp_port() const { return udp_.port(); }
  uint16_t admin_port() const { return admin_.port(); }
  ShovelerCounters counters() const { return queue_.snapshot(); }
  std::size_t queue_bound() const { return queue_.bound(); }

  /// Enqueues a record directly, bypassing UDP (harness fault injection).
  void inject(const MonitorRecord& record) {
    queue_.push(encode_monitor_record(record));
  }

  void pause_drain(bool paused) { drain_paused_.store(paused); }

 private:
  void ingest_loop() {
    while (auto datagram = udp_.recv(stop_)) {
      try {
        MonitorRecord r = decode_monitor_record(*datagram);
        queue_.push(encode_monitor_record(r));  // canonical form
      } catch (const ProtocolError&) {
        queue_.note_malformed();
      }
    }
  }

  void drain_loop() {
    std::optional<TcpStream> conn;
    int64_t backoff_ms = options_.backoff_initial_ms;
    while (!stop_.signalled()) {
      if (drain_paused_.load()) {
        sleep_interruptible(20);
        continue;
      }
      if (!queue_.wait_nonempty(std::chrono::milliseconds(100))) continue;

      if (!conn) {
        try {
          conn = TcpStream::connect(collector_, options_.connect_timeout_ms);
          backoff_ms = options_.backoff_initial_ms;
        } catch (const ConnectionError&) {
          sleep_interruptible(backoff_ms);
          backoff_ms = std::min(backoff_ms * 2, options_.backoff_cap_ms);
          continue;
        }
      }

      auto item = queue_.front();
      if (!item) continue;
      try {
        frame_write(*conn, item->second);
        if (!await_ack(*conn)) {
          conn.reset();
          continue;
        }
        queue_.pop_acked(item->first);
      } catch (const ConnectionError&) {
        conn.reset();
      }
    }
  }

  /// Waits for the ack byte in short slices so stop stays responsive even
  /// against a stalled collector. False means give up and reconnect.
  bool await_ack(TcpStream& conn) {
    int64_t deadline = steady_ms() + options_.ack_timeout_ms;
    conn.set_timeouts(50, 5000);
    while (steady_ms() < deadline) {
      if (stop_.signalled()) return false;
      try {
        char c = 0;
        if (!conn.read_byte(c)) return false;  // peer closed
        return c == kFrameAck;
      } catch (const TimeoutError&) {
        continue;
      }
    }
    return false;
  }

  void sleep_interruptible(int64_t ms) {
    int64_t deadline = steady_ms() + ms;
    while (steady_ms() < deadline && !stop_.signalled()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          std::min<int64_t>(20, deadline - steady_ms())));
    }
  }

  Response handle_admin(const Request& req, ProtocolServer::Context&) {
    if (req.method != Method::Stats) return Response{404, {}, ""};
    ShovelerCounters c = queue_.snapshot();
    nlohmann::json j = {{"received", c.received},
                        {"forwarded", c.forwarded},
                        {"dropped", c.dropped},
                        {"queue_depth", c.queue_depth},
                        {"malformed", c.malformed},
                        {"queue_bound", queue_.bound()}};
    std::string body = j.dump();
    return Response{
        200, {{"Content-Length", std::to_string(body.size())}}, body};
  }

  ShovelerOptions options_;
  HostPort collector_;
  RecordQueue queue_;
  UdpSocket udp_;
  StopEvent stop_;
  std::atomic<bool> stopped_{false};
  std::atomic<bool> drain_paused_{false};
  std::thread ingest_thread_;
  std::thread drain_thread_;
  ProtocolServer admin_;
};

}  // namespace minifed
