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

// Seeded generators for valid protocol values, shared by the unit tests
// and the acceptance round-trip suites.

#include <random>
#include <string>

#include "minifed/records.hpp"
#include "minifed/wire.hpp"

namespace minifed::testutil {

inline std::string random_blob(std::mt19937_64& rng, std::size_t n) {
  std::string out(n, '\0');
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& c : out) c = char(byte(rng));
  return out;
}

inline std::string random_segment(std::mt19937_64& rng) {
  static constexpr char kChars[] =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-";
  std::uniform_int_distribution<std::size_t> len(1, 10);
  std::uniform_int_distribution<std::size_t> pick(0, sizeof(kChars) - 2);
  while (true) {
    std::string seg;
    std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) seg += kChars[pick(rng)];
    if (seg != "." && seg != "..") return seg;
  }
}

inline std::string random_object_path(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> depth(1, 4);
  std::string path;
  int n = depth(rng);
  for (int i = 0; i < n; ++i) path += "/" + random_segment(rng);
  return path;
}

inline std::string random_header_value(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> len(0, 24);
  std::uniform_int_distribution<int> ch(0x20, 0x7e);  // printable, no CR/LF
  std::string v;
  std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) v += char(ch(rng));
  return v;
}

inline std::string random_header_name(std::mt19937_64& rng) {
  static constexpr char kChars[] =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-";
  std::uniform_int_distribution<std::size_t> len(1, 12);
  std::uniform_int_distribution<std::size_t> pick(0, sizeof(kChars) - 2);
  while (true) {
    std::string name;
    std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) name += kChars[pick(rng)];
    // The generator stays clear of the one header with a uniqueness rule.
    if (!header_name_equal(name, "Authorization")) return name;
  }
}

inline Request random_request(std::mt19937_64& rng) {
  Request r;
  std::uniform_int_distribution<int> method(0, 2);
  switch (method(rng)) {
    case 0: r.method = Method::Get; break;
    case 1: r.method = Method::Locate; break;
    default: r.method = Method::Stats; break;
  }
  if (r.method != Method::Stats) r.path = random_object_path(rng);
  std::uniform_int_distribution<int> nheaders(0, 4);
  int n = nheaders(rng);
  for (int i = 0; i < n; ++i) {
    r.headers.emplace_back(random_header_name(rng), random_header_value(rng));
  }
  if (rng() % 4 == 0) {
    r.headers.emplace_back("Authorization", random_header_value(rng));
  }
  return r;
}

inline Response random_response(std::mt19937_64& rng) {
  static constexpr int kCodes[] = {200, 302, 401, 403, 404, 500};
  Response r;
  r.code = kCodes[rng() % 6];
  if (r.code == 200) {
    r.body = random_blob(rng, rng() % 512);
    r.headers.emplace_back("Content-Length", std::to_string(r.body.size()));
    if (rng() % 2) {
      r.headers.emplace_back("X-Cache", rng() % 2 ? "HIT" : "MISS");
    }
  } else if (r.code == 302) {
    r.headers.emplace_back("Location",
                           "h" + std::to_string(rng() % 100) + ":1");
  }
  std::uniform_int_distribution<int> nheaders(0, 2);
  int n = nheaders(rng);
  for (int i = 0; i < n; ++i) {
    std::string name = random_header_name(rng);
    if (header_name_equal(name, "Content-Length") ||
        header_name_equal(name, "Location") ||
        header_name_equal(name, "X-Cache")) {
      continue;
    }
    r.headers.emplace_back(std::move(name), random_header_value(rng));
  }
  return r;
}

inline MonitorRecord random_record(std::mt19937_64& rng) {
  MonitorRecord r;
  r.stream = rng() % 2 ? Stream::F : Stream::G;
  if (r.stream == Stream::F) {
    r.event = rng() % 2 ? RecordEvent::Open : RecordEvent::Close;
  } else {
    static constexpr RecordEvent kG[] = {RecordEvent::Hit, RecordEvent::Miss,
                                         RecordEvent::Evict};
    r.event = kG[rng() % 3];
  }
  r.ts_ms = int64_t(rng() % 2'000'000'000'000ull);
  r.host = "svc-" + std::to_string(rng() % 50);
  r.component = rng() % 2 ? "cache" : "origin";
  r.path = random_object_path(rng);
  r.bytes = rng() % 1'000'000'000;
  if (r.stream == Stream::F && r.event == RecordEvent::Close) {
    r.duration_ms = rng() % 100'000;
  }
  r.client = "client-" + std::to_string(rng() % 1000);
  r.xfer_id = "x-" + std::to_string(rng());
  return r;
}

}  // namespace minifed::testutil
