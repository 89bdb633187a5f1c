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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace minifed {

/// Invalid argument handed to a library call (malformed scope, empty
/// secret, out-of-range coordinate, ...).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Service configuration problem discovered at startup (unreadable root
/// directory, unknown service id, port already bound).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TopologyErrorCode {
  BadJson,
  MissingField,
  BadEndpoint,
  DuplicateServiceId,
  MalformedPrefix,
  DuplicatePrefix,
  UnclaimedNamespace,
  MultiplyClaimedNamespace,
  EmptyOriginNamespaces,
  UnregisteredClaim,
  BadCapacity,
  BadCoordinates,
  MissingSecret,
  UnexpectedSecret,
};

inline const char* to_string(TopologyErrorCode code) {
  switch (code) {
    case TopologyErrorCode::BadJson: return "bad-json";
    case TopologyErrorCode::MissingField: return "missing-field";
    case TopologyErrorCode::BadEndpoint: return "bad-endpoint";
    case TopologyErrorCode::DuplicateServiceId: return "duplicate-service-id";
    case TopologyErrorCode::MalformedPrefix: return "malformed-prefix";
    case TopologyErrorCode::DuplicatePrefix: return "duplicate-prefix";
    case TopologyErrorCode::UnclaimedNamespace: return "unclaimed-namespace";
    case TopologyErrorCode::MultiplyClaimedNamespace:
      return "multiply-claimed-namespace";
    case TopologyErrorCode::EmptyOriginNamespaces:
      return "empty-origin-namespaces";
    case TopologyErrorCode::UnregisteredClaim: return "unregistered-claim";
    case TopologyErrorCode::BadCapacity: return "bad-capacity";
    case TopologyErrorCode::BadCoordinates: return "bad-coordinates";
    case TopologyErrorCode::MissingSecret: return "missing-secret";
    case TopologyErrorCode::UnexpectedSecret: return "unexpected-secret";
  }
  return "unknown";
}

/// Topology file rejected by validation. `code()` is stable so tests and
/// operators can tell the failure classes apart.
class TopologyError : public std::runtime_error {
 public:
  TopologyError(TopologyErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  TopologyErrorCode code() const { return code_; }

 private:
  TopologyErrorCode code_;
};

/// Byte-level encode/decode failure. `kind()` names one of the error
/// classes documented in docs/protocol.md; `offset()` is the byte position
/// where decoding gave up (0 when it does not apply).
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::string kind, std::size_t offset, const std::string& what)
      : std::runtime_error(what + " [" + kind + " at byte " +
                           std::to_string(offset) + "]"),
        kind_(std::move(kind)),
        offset_(offset) {}

  const std::string& kind() const { return kind_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string kind_;
  std::size_t offset_;
};

/// Transport-level failure: dial refused, timeout, peer hung up mid-frame.
class ConnectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace minifed
