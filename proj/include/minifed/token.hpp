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
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "minifed/encoding.hpp"
#include "minifed/errors.hpp"
#include "minifed/paths.hpp"

namespace minifed {

// Bearer tokens are two base64url parts joined by ".":
//   base64url(payload) "." base64url(HMAC-SHA256(secret, payload))
// The payload is canonical JSON (sorted keys, compact) with fields
// "sub", "scopes" (each "read:<absolute prefix>") and "exp" (unix seconds),
// so minting is deterministic for fixed inputs.

inline constexpr std::string_view kScopePrefix = "read:";

inline std::string scope_prefix_of(std::string_view scope) {
  // "read:/ligo" -> "/ligo"; empty when the scope is malformed.
  if (scope.substr(0, kScopePrefix.size()) != kScopePrefix) return {};
  std::string_view prefix = scope.substr(kScopePrefix.size());
  if (!is_valid_namespace_prefix(prefix)) return {};
  return std::string(prefix);
}

inline std::string mint_token(std::string_view subject,
                              const std::vector<std::string>& scopes,
                              uint64_t expiry_unix_s,
                              std::string_view secret) {
  if (secret.empty()) throw InputError("mint_token: empty secret");
  for (const auto& s : scopes) {
    if (scope_prefix_of(s).empty()) {
      throw InputError("mint_token: malformed scope: " + s);
    }
  }
  nlohmann::json payload = {
      {"exp", expiry_unix_s}, {"scopes", scopes}, {"sub", std::string(subject)}};
  std::string bytes = payload.dump();
  auto mac = hmac_sha256(secret, bytes);
  return base64url_encode(bytes) + "." +
         base64url_encode(std::string_view(
             reinterpret_cast<const char*>(mac.data()), mac.size()));
}

enum class TokenVerdict { Allow, BadSignature, Expired, OutOfScope, Malformed };

inline const char* to_string(TokenVerdict v) {
  switch (v) {
    case TokenVerdict::Allow: return "allow";
    case TokenVerdict::BadSignature: return "bad-signature";
    case TokenVerdict::Expired: return "expired";
    case TokenVerdict::OutOfScope: return "out-of-scope";
    case TokenVerdict::Malformed: return "malformed";
  }
  return "unknown";
}

/// Checks signature, expiry and scope coverage for `path`, in that order.
/// Never throws: every failure is a distinguishable deny verdict.
inline TokenVerdict verify_token(std::string_view wire, std::string_view secret,
                                 std::string_view path, uint64_t now_unix_s) {
  std::size_t dot = wire.find('.');
  if (dot == std::string_view::npos ||
      wire.find('.', dot + 1) != std::string_view::npos) {
    return TokenVerdict::Malformed;
  }
  auto payload = base64url_decode(wire.substr(0, dot));
  auto sig = base64url_decode(wire.substr(dot + 1));
  if (!payload || !sig) return TokenVerdict::Malformed;
  if (sig->size() != 32) return TokenVerdict::Malformed;

  auto expected = hmac_sha256(secret, *payload);
  if (!digest_equal(expected, *sig)) return TokenVerdict::BadSignature;

  nlohmann::json j = nlohmann::json::parse(*payload, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return TokenVerdict::Malformed;
  if (!j.contains("exp") || !j["exp"].is_number_unsigned() ||
      !j.contains("sub") || !j["sub"].is_string() || !j.contains("scopes") ||
      !j["scopes"].is_array()) {
    return TokenVerdict::Malformed;
  }
  std::vector<std::string> prefixes;
  for (const auto& s : j["scopes"]) {
    if (!s.is_string()) return TokenVerdict::Malformed;
    std::string p = scope_prefix_of(s.get<std::string>());
    if (p.empty()) return TokenVerdict::Malformed;
    prefixes.push_back(std::move(p));
  }

  if (j["exp"].get<uint64_t>() <= now_unix_s) return TokenVerdict::Expired;

  for (const auto& p : prefixes) {
    if (prefix_matches(p, path)) return TokenVerdict::Allow;
  }
  return TokenVerdict::OutOfScope;
}

}  // namespace minifed
