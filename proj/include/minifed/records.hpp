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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "minifed/errors.hpp"

namespace minifed {

// One monitoring event. The f-stream describes file transfers
// (open/close); the g-stream describes cache behavior (hit/miss/evict).
// Encoded as one UTF-8 JSON object per UDP datagram, capped at 8 KiB.

inline constexpr std::size_t kMaxDatagramBytes = 8192;

enum class Stream : uint8_t { F, G };
enum class RecordEvent : uint8_t { Open, Close, Hit, Miss, Evict };

inline const char* to_string(Stream s) { return s == Stream::F ? "f" : "g"; }

inline const char* to_string(RecordEvent e) {
  switch (e) {
    case RecordEvent::Open: return "open";
    case RecordEvent::Close: return "close";
    case RecordEvent::Hit: return "hit";
    case RecordEvent::Miss: return "miss";
    case RecordEvent::Evict: return "evict";
  }
  return "unknown";
}

struct MonitorRecord {
  Stream stream = Stream::F;
  int64_t ts_ms = 0;
  std::string host;       // emitting service id
  std::string component;  // "cache" | "origin"
  RecordEvent event = RecordEvent::Open;
  std::string path;
  uint64_t bytes = 0;
  std::optional<uint64_t> duration_ms;  // f-close only
  std::string client;
  std::string xfer_id;

  friend bool operator==(const MonitorRecord&, const MonitorRecord&) = default;
};

inline bool stream_event_compatible(Stream s, RecordEvent e) {
  if (s == Stream::F) {
    return e == RecordEvent::Open || e == RecordEvent::Close;
  }
  return e == RecordEvent::Hit || e == RecordEvent::Miss ||
         e == RecordEvent::Evict;
}

namespace detail {

inline void check_record(const MonitorRecord& r) {
  if (!stream_event_compatible(r.stream, r.event)) {
    throw ProtocolError("stream-event-mismatch", 0,
                        std::string("event ") + to_string(r.event) +
                            " not valid on " + to_string(r.stream) +
                            "-stream");
  }
  bool close_f = r.stream == Stream::F && r.event == RecordEvent::Close;
  if (close_f && !r.duration_ms) {
    throw ProtocolError("missing-field", 0, "f-close requires duration_ms");
  }
  if (!close_f && r.duration_ms) {
    throw ProtocolError("unexpected-field", 0,
                        "duration_ms only valid on f-close");
  }
  if (r.component != "cache" && r.component != "origin") {
    throw ProtocolError("bad-component", 0, "component: " + r.component);
  }
}

}  // namespace detail

inline std::string encode_monitor_record(const MonitorRecord& r) {
  detail::check_record(r);
  nlohmann::json j = {
      {"stream", to_string(r.stream)}, {"ts_ms", r.ts_ms},
      {"host", r.host},                {"component", r.component},
      {"event", to_string(r.event)},   {"path", r.path},
      {"bytes", r.bytes},              {"client", r.client},
      {"xfer_id", r.xfer_id},
  };
  if (r.duration_ms) j["duration_ms"] = *r.duration_ms;
  std::string out = j.dump();
  if (out.size() > kMaxDatagramBytes) {
    throw ProtocolError("oversize", 0,
                        "encoded record exceeds datagram budget");
  }
  return out;
}

inline MonitorRecord decode_monitor_record(std::string_view bytes) {
  if (bytes.size() > kMaxDatagramBytes) {
    throw ProtocolError("oversize", 0, "datagram exceeds budget");
  }
  nlohmann::json j = nlohmann::json::parse(bytes, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ProtocolError("bad-json", 0, "record is not a JSON object");
  }
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) {
      throw ProtocolError("missing-field", 0, std::string("field ") + key);
    }
    return j.at(key);
  };

  MonitorRecord r;
  const auto& stream = need("stream");
  if (!stream.is_string()) throw ProtocolError("bad-type", 0, "stream");
  if (stream == "f") {
    r.stream = Stream::F;
  } else if (stream == "g") {
    r.stream = Stream::G;
  } else {
    throw ProtocolError("unknown-stream", 0, stream.get<std::string>());
  }

  const auto& ev = need("event");
  if (!ev.is_string()) throw ProtocolError("bad-type", 0, "event");
  std::string evs = ev.get<std::string>();
  if (evs == "open") r.event = RecordEvent::Open;
  else if (evs == "close") r.event = RecordEvent::Close;
  else if (evs == "hit") r.event = RecordEvent::Hit;
  else if (evs == "miss") r.event = RecordEvent::Miss;
  else if (evs == "evict") r.event = RecordEvent::Evict;
  else throw ProtocolError("unknown-event", 0, evs);

  if (!need("ts_ms").is_number_integer()) {
    throw ProtocolError("bad-type", 0, "ts_ms");
  }
  r.ts_ms = j["ts_ms"].get<int64_t>();
  if (!need("host").is_string()) throw ProtocolError("bad-type", 0, "host");
  r.host = j["host"].get<std::string>();
  if (!need("component").is_string()) {
    throw ProtocolError("bad-type", 0, "component");
  }
  r.component = j["component"].get<std::string>();
  if (!need("path").is_string()) throw ProtocolError("bad-type", 0, "path");
  r.path = j["path"].get<std::string>();
  if (!need("bytes").is_number_unsigned()) {
    throw ProtocolError("bad-type", 0, "bytes");
  }
  r.bytes = j["bytes"].get<uint64_t>();
  if (!need("client").is_string()) throw ProtocolError("bad-type", 0, "client");
  r.client = j["client"].get<std::string>();
  if (!need("xfer_id").is_string()) {
    throw ProtocolError("bad-type", 0, "xfer_id");
  }
  r.xfer_id = j["xfer_id"].get<std::string>();
  if (j.contains("duration_ms")) {
    if (!j["duration_ms"].is_number_unsigned()) {
      throw ProtocolError("bad-type", 0, "duration_ms");
    }
    r.duration_ms = j["duration_ms"].get<uint64_t>();
  }
  detail::check_record(r);
  return r;
}

/// Identity a record keeps across retransmissions; the collector uses it
/// to deduplicate at-least-once delivery.
inline std::string dedup_key(const MonitorRecord& r) {
  if (r.stream == Stream::F) {
    return std::string("f|") + r.host + "|" + r.xfer_id + "|" +
           to_string(r.event);
  }
  return std::string("g|") + r.host + "|" + to_string(r.event) + "|" +
         std::to_string(r.ts_ms) + "|" + r.path;
}

}  // namespace minifed
