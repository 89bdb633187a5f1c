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
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "minifed/clock.hpp"
#include "minifed/net.hpp"
#include "minifed/records.hpp"

namespace minifed::testutil {

class TempTree {
 public:
  explicit TempTree(const std::string& tag) {
    static std::atomic<int> counter{0};
    root_ = std::filesystem::temp_directory_path() /
            ("minifed-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::create_directories(root_);
  }
  ~TempTree() {
    std::error_code ec;
    std::filesystem::remove_all(root_, ec);
  }
  const std::filesystem::path& root() const { return root_; }
  std::string str() const { return root_.string(); }

  void write(const std::string& rel, const std::string& content) {
    std::filesystem::path p = root_ / rel;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    f.write(content.data(), std::streamsize(content.size()));
  }

 private:
  std::filesystem::path root_;
};

/// Plays the shoveler's UDP role for tests: collects monitor records.
class UdpCapture {
 public:
  UdpCapture() : sock_(UdpSocket::bind("127.0.0.1", 0)) {
    thread_ = std::thread([this] {
      while (auto datagram = sock_.recv(stop_)) {
        try {
          MonitorRecord r = decode_monitor_record(*datagram);
          std::lock_guard lk(mu_);
          records_.push_back(std::move(r));
        } catch (const ProtocolError&) {
          std::lock_guard lk(mu_);
          ++malformed_;
        }
      }
    });
  }
  ~UdpCapture() {
    stop_.signal();
    thread_.join();
  }

  HostPort addr() const { return {"127.0.0.1", sock_.port()}; }

  std::vector<MonitorRecord> records() const {
    std::lock_guard lk(mu_);
    return records_;
  }

  std::size_t malformed() const {
    std::lock_guard lk(mu_);
    return malformed_;
  }

  bool wait_count(std::size_t n, int64_t timeout_ms = 3000) const {
    int64_t deadline = steady_ms() + timeout_ms;
    while (steady_ms() < deadline) {
      {
        std::lock_guard lk(mu_);
        if (records_.size() >= n) return true;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return false;
  }

 private:
  UdpSocket sock_;
  StopEvent stop_;
  std::thread thread_;
  mutable std::mutex mu_;
  std::vector<MonitorRecord> records_;
  std::size_t malformed_ = 0;
};

inline std::string random_content(std::size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::string out(n, '\0');
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& c : out) c = char(byte(rng));
  return out;
}

}  // namespace minifed::testutil
