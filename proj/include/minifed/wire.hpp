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

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "minifed/errors.hpp"

namespace minifed {

// OSDF-MINI/1, the data-plane line protocol. Grammar and the full list of
// error kinds live in docs/protocol.md. One request per connection.

inline constexpr std::string_view kProtocolTag = "OSDF-MINI/1";
inline constexpr char kFrameAck = 0x06;
inline constexpr uint32_t kMaxFramePayload = (1u << 24) - 1;

enum class Method : uint8_t { Get, Locate, Stats };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Get: return "GET";
    case Method::Locate: return "LOCATE";
    case Method::Stats: return "STATS";
  }
  return "unknown";
}

using Headers = std::vector<std::pair<std::string, std::string>>;

inline bool header_name_equal(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    char x = a[i], y = b[i];
    if (x >= 'A' && x <= 'Z') x += 32;
    if (y >= 'A' && y <= 'Z') y += 32;
    if (x != y) return false;
  }
  return true;
}

inline std::optional<std::string_view> get_header(const Headers& headers,
                                                  std::string_view name) {
  for (const auto& [n, v] : headers) {
    if (header_name_equal(n, name)) return std::string_view(v);
  }
  return std::nullopt;
}

inline bool valid_header_name(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name) {
    bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
              (c >= '0' && c <= '9') || c == '-';
    if (!ok) return false;
  }
  return true;
}

struct Request {
  Method method = Method::Get;
  std::string path;  // empty for STATS
  Headers headers;

  friend bool operator==(const Request& a, const Request& b) {
    if (a.method != b.method || a.path != b.path ||
        a.headers.size() != b.headers.size()) {
      return false;
    }
    for (std::size_t i = 0; i < a.headers.size(); ++i) {
      if (!header_name_equal(a.headers[i].first, b.headers[i].first) ||
          a.headers[i].second != b.headers[i].second) {
        return false;
      }
    }
    return true;
  }
};

struct Response {
  int code = 200;
  Headers headers;
  std::string body;

  friend bool operator==(const Response& a, const Response& b) {
    if (a.code != b.code || a.body != b.body ||
        a.headers.size() != b.headers.size()) {
      return false;
    }
    for (std::size_t i = 0; i < a.headers.size(); ++i) {
      if (!header_name_equal(a.headers[i].first, b.headers[i].first) ||
          a.headers[i].second != b.headers[i].second) {
        return false;
      }
    }
    return true;
  }
};

inline const char* reason_phrase(int code) {
  switch (code) {
    case 200: return "OK";
    case 302: return "Found";
    case 401: return "Unauthorized";
    case 403: return "Forbidden";
    case 404: return "Not Found";
    case 500: return "Internal Server Error";
  }
  return "Unknown";
}

inline bool known_code(int code) {
  return code == 200 || code == 302 || code == 401 || code == 403 ||
         code == 404 || code == 500;
}

namespace detail {

inline void check_headers(const Headers& headers) {
  int auth = 0;
  for (const auto& [n, v] : headers) {
    if (!valid_header_name(n)) {
      throw ProtocolError("bad-header-name", 0, "header name: " + n);
    }
    if (v.find('\r') != std::string::npos ||
        v.find('\n') != std::string::npos) {
      throw ProtocolError("bad-header-value", 0, "CR/LF in value of " + n);
    }
    if (header_name_equal(n, "Authorization")) ++auth;
  }
  if (auth > 1) {
    throw ProtocolError("duplicate-authorization", 0,
                        "more than one Authorization header");
  }
}

inline void check_request(const Request& r) {
  check_headers(r.headers);
  if (r.method == Method::Stats) {
    if (!r.path.empty()) {
      throw ProtocolError("unexpected-path", 0, "STATS carries no path");
    }
  } else {
    if (r.path.empty() || r.path[0] != '/') {
      throw ProtocolError("bad-path", 0, "path must be absolute");
    }
    if (r.path.find(' ') != std::string::npos) {
      throw ProtocolError("bad-path", 0, "path contains a space");
    }
  }
}

inline void check_response(const Response& r) {
  if (!known_code(r.code)) {
    throw ProtocolError("unknown-code", 0, std::to_string(r.code));
  }
  check_headers(r.headers);
  auto content_length = get_header(r.headers, "Content-Length");
  if (r.code == 200) {
    if (!content_length) {
      throw ProtocolError("missing-content-length", 0,
                          "200 requires Content-Length");
    }
    if (*content_length != std::to_string(r.body.size())) {
      throw ProtocolError("length-mismatch", 0,
                          "Content-Length does not match body size");
    }
  } else {
    if (!r.body.empty()) {
      throw ProtocolError("body-forbidden", 0,
                          "non-200 responses carry no body");
    }
    if (content_length && *content_length != "0") {
      throw ProtocolError("length-mismatch", 0,
                          "non-200 Content-Length must be 0");
    }
  }
  if (r.code == 302 && !get_header(r.headers, "Location")) {
    throw ProtocolError("missing-location", 0, "302 requires Location");
  }
  if (auto xc = get_header(r.headers, "X-Cache");
      xc && *xc != "HIT" && *xc != "MISS") {
    throw ProtocolError("bad-x-cache", 0, "X-Cache must be HIT or MISS");
  }
}

// Parses `Name: value` lines between `pos` and `head_end`. Offsets in
// errors are absolute within `bytes`.
inline Headers parse_header_lines(std::string_view bytes, std::size_t pos,
                                  std::size_t head_end) {
  Headers headers;
  while (pos < head_end) {
    std::size_t eol = bytes.find("\r\n", pos);
    std::string_view line = bytes.substr(pos, eol - pos);
    std::size_t colon = line.find(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw ProtocolError("malformed-header", pos, "expected `Name: value`");
    }
    std::string_view name = line.substr(0, colon);
    if (!valid_header_name(name)) {
      throw ProtocolError("malformed-header", pos,
                          "bad header name: " + std::string(name));
    }
    if (colon + 1 >= line.size() || line[colon + 1] != ' ') {
      throw ProtocolError("malformed-header", pos + colon,
                          "missing space after colon");
    }
    headers.emplace_back(std::string(name), std::string(line.substr(colon + 2)));
    pos = eol + 2;
  }
  return headers;
}

}  // namespace detail

inline std::string encode_request(const Request& r) {
  detail::check_request(r);
  std::string out = std::string(to_string(r.method)) + " " + r.path + " " +
                    std::string(kProtocolTag) + "\r\n";
  for (const auto& [n, v] : r.headers) out += n + ": " + v + "\r\n";
  out += "\r\n";
  return out;
}

inline Request decode_request(std::string_view bytes) {
  std::size_t term = bytes.find("\r\n\r\n");
  if (term == std::string_view::npos) {
    throw ProtocolError("missing-terminator", bytes.size(),
                        "no CRLF CRLF terminator");
  }
  if (term + 4 != bytes.size()) {
    throw ProtocolError("trailing-bytes", term + 4,
                        "bytes after request terminator");
  }
  std::size_t eol = bytes.find("\r\n");
  std::string_view line = bytes.substr(0, eol);
  std::size_t sp1 = line.find(' ');
  std::size_t sp2 = line.rfind(' ');
  if (sp1 == std::string_view::npos || sp2 == sp1) {
    throw ProtocolError("bad-request-line", 0,
                        "expected `METHOD path OSDF-MINI/1`");
  }
  std::string_view method = line.substr(0, sp1);
  std::string_view path = line.substr(sp1 + 1, sp2 - sp1 - 1);
  std::string_view version = line.substr(sp2 + 1);

  Request r;
  if (method == "GET") r.method = Method::Get;
  else if (method == "LOCATE") r.method = Method::Locate;
  else if (method == "STATS") r.method = Method::Stats;
  else throw ProtocolError("unknown-method", 0, std::string(method));
  if (version != kProtocolTag) {
    throw ProtocolError("bad-version", sp2 + 1, std::string(version));
  }
  r.path = std::string(path);

  std::size_t pos = eol + 2;
  r.headers = detail::parse_header_lines(bytes, pos, term);
  detail::check_request(r);
  return r;
}

inline std::string encode_response(const Response& r) {
  detail::check_response(r);
  std::string out = std::string(kProtocolTag) + " " + std::to_string(r.code) +
                    " " + reason_phrase(r.code) + "\r\n";
  for (const auto& [n, v] : r.headers) out += n + ": " + v + "\r\n";
  out += "\r\n";
  out += r.body;
  return out;
}

inline Response decode_response(std::string_view bytes) {
  std::size_t term = bytes.find("\r\n\r\n");
  if (term == std::string_view::npos) {
    throw ProtocolError("missing-terminator", bytes.size(),
                        "no CRLF CRLF terminator");
  }
  std::size_t eol = bytes.find("\r\n");
  std::string_view line = bytes.substr(0, eol);
  std::size_t sp1 = line.find(' ');
  if (sp1 == std::string_view::npos ||
      line.substr(0, sp1) != kProtocolTag) {
    throw ProtocolError("bad-status-line", 0, "missing protocol tag");
  }
  std::size_t sp2 = line.find(' ', sp1 + 1);
  if (sp2 == std::string_view::npos || sp2 + 1 >= line.size()) {
    throw ProtocolError("bad-status-line", sp1 + 1,
                        "expected `OSDF-MINI/1 code reason`");
  }
  std::string_view code_str = line.substr(sp1 + 1, sp2 - sp1 - 1);
  int code = 0;
  if (code_str.size() != 3) {
    throw ProtocolError("bad-status-line", sp1 + 1, "code must be 3 digits");
  }
  for (char c : code_str) {
    if (c < '0' || c > '9') {
      throw ProtocolError("bad-status-line", sp1 + 1, "non-digit in code");
    }
    code = code * 10 + (c - '0');
  }
  if (!known_code(code)) {
    throw ProtocolError("unknown-code", sp1 + 1, std::string(code_str));
  }

  Response r;
  r.code = code;
  std::size_t pos = eol + 2;
  r.headers = detail::parse_header_lines(bytes, pos, term);

  std::string_view body = bytes.substr(term + 4);
  auto content_length = get_header(r.headers, "Content-Length");
  std::size_t expected = 0;
  if (content_length) {
    for (char c : *content_length) {
      if (c < '0' || c > '9') {
        throw ProtocolError("bad-content-length", 0,
                            std::string(*content_length));
      }
      expected = expected * 10 + std::size_t(c - '0');
      if (expected > (std::size_t(1) << 40)) {
        throw ProtocolError("bad-content-length", 0, "length out of range");
      }
    }
  }
  if (body.size() != expected) {
    throw ProtocolError("length-mismatch", term + 4,
                        "declared " + std::to_string(expected) + ", got " +
                            std::to_string(body.size()) + " bytes");
  }
  r.body = std::string(body);
  detail::check_response(r);
  return r;
}

// ── Shoveler→collector framing ──────────────────────────────────────────
// 4-byte big-endian length, payload verbatim. The receiver acks each frame
// with the single byte 0x06.

inline std::string frame_encode(std::string_view payload) {
  if (payload.size() > kMaxFramePayload) {
    throw ProtocolError("frame-too-large", 0,
                        "payload length " + std::to_string(payload.size()));
  }
  uint32_t n = uint32_t(payload.size());
  std::string out;
  out.reserve(4 + payload.size());
  out += char((n >> 24) & 0xff);
  out += char((n >> 16) & 0xff);
  out += char((n >> 8) & 0xff);
  out += char(n & 0xff);
  out.append(payload);
  return out;
}

inline uint32_t frame_declared_len(const char header[4]) {
  uint32_t n = (uint32_t(uint8_t(header[0])) << 24) |
               (uint32_t(uint8_t(header[1])) << 16) |
               (uint32_t(uint8_t(header[2])) << 8) |
               uint32_t(uint8_t(header[3]));
  if (n > kMaxFramePayload) {
    throw ProtocolError("frame-too-large", 0,
                        "declared length " + std::to_string(n));
  }
  return n;
}

/// Decodes the frame starting at `buf[pos]`, advancing `pos` past it.
inline std::string frame_decode(std::string_view buf, std::size_t& pos) {
  if (buf.size() - pos < 4) {
    throw ProtocolError("short-frame", pos, "incomplete length header");
  }
  uint32_t n = frame_declared_len(buf.data() + pos);
  if (buf.size() - pos - 4 < n) {
    throw ProtocolError("short-frame", pos + 4, "incomplete payload");
  }
  std::string payload(buf.substr(pos + 4, n));
  pos += 4 + n;
  return payload;
}

}  // namespace minifed
