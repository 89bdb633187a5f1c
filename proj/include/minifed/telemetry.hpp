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
#include <optional>
#include <random>
#include <string>

#include "minifed/clock.hpp"
#include "minifed/encoding.hpp"
#include "minifed/hostport.hpp"
#include "minifed/net.hpp"
#include "minifed/records.hpp"

namespace minifed {

/// Fire-and-forget UDP sender for monitoring records. A down or absent
/// shoveler never delays or fails the data path: errors are swallowed.
class MonitorEmitter {
 public:
  explicit MonitorEmitter(std::optional<HostPort> target = std::nullopt)
      : target_(std::move(target)), sock_(UdpSocket::sender()) {
    std::random_device rd;
    uint64_t nonce = (uint64_t(rd()) << 32) | rd();
    nonce_ = hex_encode(std::string(reinterpret_cast<char*>(&nonce), 8));
  }

  void emit(const MonitorRecord& record) {
    if (!target_) return;
    try {
      sock_.send_to(*target_, encode_monitor_record(record));
    } catch (...) {
      // Telemetry must never take down a transfer.
    }
  }

  /// Transfer ids stay unique across process restarts via a startup nonce.
  std::string next_xfer_id(const std::string& host) {
    return host + "-" + nonce_ + "-" +
           std::to_string(seq_.fetch_add(1, std::memory_order_relaxed));
  }

  bool enabled() const { return target_.has_value(); }

 private:
  std::optional<HostPort> target_;
  UdpSocket sock_;
  std::string nonce_;
  std::atomic<uint64_t> seq_{0};
};

}  // namespace minifed
