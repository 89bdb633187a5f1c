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

#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "minifed/encoding.hpp"
#include "minifed/errors.hpp"
#include "minifed/hostport.hpp"
#include "minifed/paths.hpp"

namespace minifed {

struct OriginSpec {
  std::string id;
  HostPort endpoint;
  std::string root_dir;
  std::vector<std::string> namespaces;
};

struct CacheSpec {
  std::string id;
  HostPort endpoint;
  double latitude = 0.0;
  double longitude = 0.0;
  uint64_t capacity_bytes = 0;
  std::string disk_dir;
};

struct NamespaceSpec {
  std::string prefix;
  bool is_public = true;
  std::string secret;  // raw bytes, non-empty iff !is_public
};

/// The static world every service reads: who exists, where, and which
/// origin owns which namespace prefix.
struct FederationTopology {
  std::vector<OriginSpec> origins;
  std::vector<CacheSpec> caches;
  HostPort redirector;
  std::vector<NamespaceSpec> namespaces;

  const OriginSpec* find_origin(std::string_view id) const {
    for (const auto& o : origins)
      if (o.id == id) return &o;
    return nullptr;
  }
  const CacheSpec* find_cache(std::string_view id) const {
    for (const auto& c : caches)
      if (c.id == id) return &c;
    return nullptr;
  }
};

/// Longest registered prefix covering `path` at a component boundary;
/// nullptr when nothing matches.
inline const NamespaceSpec* resolve_namespace(
    std::string_view path, const std::vector<NamespaceSpec>& table) {
  if (path.empty() || path[0] != '/') {
    throw InputError("resolve_namespace: path must be absolute");
  }
  const NamespaceSpec* best = nullptr;
  for (const auto& ns : table) {
    if (!prefix_matches(ns.prefix, path)) continue;
    if (!best || ns.prefix.size() > best->prefix.size()) best = &ns;
  }
  return best;
}

inline void validate_topology(const FederationTopology& topo) {
  std::set<std::string> ids;
  for (const auto& o : topo.origins) {
    if (!ids.insert(o.id).second) {
      throw TopologyError(TopologyErrorCode::DuplicateServiceId, o.id);
    }
    if (o.namespaces.empty()) {
      throw TopologyError(TopologyErrorCode::EmptyOriginNamespaces, o.id);
    }
  }
  for (const auto& c : topo.caches) {
    if (!ids.insert(c.id).second) {
      throw TopologyError(TopologyErrorCode::DuplicateServiceId, c.id);
    }
    if (c.capacity_bytes == 0) {
      throw TopologyError(TopologyErrorCode::BadCapacity, c.id);
    }
    if (c.latitude < -90.0 || c.latitude > 90.0 || c.longitude < -180.0 ||
        c.longitude > 180.0) {
      throw TopologyError(TopologyErrorCode::BadCoordinates, c.id);
    }
  }

  std::set<std::string> prefixes;
  for (const auto& ns : topo.namespaces) {
    if (!is_valid_namespace_prefix(ns.prefix)) {
      throw TopologyError(TopologyErrorCode::MalformedPrefix, ns.prefix);
    }
    if (!prefixes.insert(ns.prefix).second) {
      throw TopologyError(TopologyErrorCode::DuplicatePrefix, ns.prefix);
    }
    if (!ns.is_public && ns.secret.empty()) {
      throw TopologyError(TopologyErrorCode::MissingSecret, ns.prefix);
    }
    if (ns.is_public && !ns.secret.empty()) {
      throw TopologyError(TopologyErrorCode::UnexpectedSecret, ns.prefix);
    }
  }

  // Exactly one origin claims each registered prefix.
  for (const auto& ns : topo.namespaces) {
    int claims = 0;
    for (const auto& o : topo.origins) {
      for (const auto& p : o.namespaces) {
        if (p == ns.prefix) ++claims;
      }
    }
    if (claims == 0) {
      throw TopologyError(TopologyErrorCode::UnclaimedNamespace, ns.prefix);
    }
    if (claims > 1) {
      throw TopologyError(TopologyErrorCode::MultiplyClaimedNamespace,
                          ns.prefix);
    }
  }
  for (const auto& o : topo.origins) {
    for (const auto& p : o.namespaces) {
      if (!prefixes.count(p)) {
        throw TopologyError(TopologyErrorCode::UnregisteredClaim,
                            o.id + " claims " + p);
      }
    }
  }
}

namespace detail {

inline HostPort endpoint_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw TopologyError(TopologyErrorCode::MissingField, key);
  }
  auto hp = parse_host_port(j[key].get<std::string>());
  if (!hp) {
    throw TopologyError(TopologyErrorCode::BadEndpoint,
                        j[key].get<std::string>());
  }
  return *hp;
}

template <typename T>
T required(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) {
    throw TopologyError(TopologyErrorCode::MissingField, key);
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw TopologyError(TopologyErrorCode::BadJson, key);
  }
}

}  // namespace detail

inline FederationTopology topology_from_json(const nlohmann::json& j) {
  FederationTopology topo;
  if (!j.is_object()) {
    throw TopologyError(TopologyErrorCode::BadJson, "top level");
  }
  for (const auto& jo : detail::required<nlohmann::json>(j, "origins")) {
    OriginSpec o;
    o.id = detail::required<std::string>(jo, "id");
    o.endpoint = detail::endpoint_field(jo, "endpoint");
    o.root_dir = detail::required<std::string>(jo, "root_dir");
    o.namespaces = detail::required<std::vector<std::string>>(jo, "namespaces");
    topo.origins.push_back(std::move(o));
  }
  for (const auto& jc : detail::required<nlohmann::json>(j, "caches")) {
    CacheSpec c;
    c.id = detail::required<std::string>(jc, "id");
    c.endpoint = detail::endpoint_field(jc, "endpoint");
    c.latitude = detail::required<double>(jc, "latitude");
    c.longitude = detail::required<double>(jc, "longitude");
    c.capacity_bytes = detail::required<uint64_t>(jc, "capacity_bytes");
    c.disk_dir = detail::required<std::string>(jc, "disk_dir");
    topo.caches.push_back(std::move(c));
  }
  if (!j.contains("redirector") || !j["redirector"].is_string()) {
    throw TopologyError(TopologyErrorCode::MissingField, "redirector");
  }
  auto hp = parse_host_port(j["redirector"].get<std::string>());
  if (!hp) {
    throw TopologyError(TopologyErrorCode::BadEndpoint,
                        j["redirector"].get<std::string>());
  }
  topo.redirector = *hp;
  for (const auto& jn : detail::required<nlohmann::json>(j, "namespaces")) {
    NamespaceSpec ns;
    ns.prefix = detail::required<std::string>(jn, "prefix");
    ns.is_public = detail::required<bool>(jn, "public");
    if (jn.contains("secret")) {
      auto raw = base64_decode(detail::required<std::string>(jn, "secret"));
      if (!raw) {
        throw TopologyError(TopologyErrorCode::BadJson,
                            "secret for " + ns.prefix);
      }
      ns.secret = *raw;
    }
    topo.namespaces.push_back(std::move(ns));
  }
  validate_topology(topo);
  return topo;
}

inline nlohmann::json topology_to_json(const FederationTopology& topo) {
  nlohmann::json j;
  j["origins"] = nlohmann::json::array();
  for (const auto& o : topo.origins) {
    j["origins"].push_back({{"id", o.id},
                            {"endpoint", o.endpoint.str()},
                            {"root_dir", o.root_dir},
                            {"namespaces", o.namespaces}});
  }
  j["caches"] = nlohmann::json::array();
  for (const auto& c : topo.caches) {
    j["caches"].push_back({{"id", c.id},
                           {"endpoint", c.endpoint.str()},
                           {"latitude", c.latitude},
                           {"longitude", c.longitude},
                           {"capacity_bytes", c.capacity_bytes},
                           {"disk_dir", c.disk_dir}});
  }
  j["redirector"] = topo.redirector.str();
  j["namespaces"] = nlohmann::json::array();
  for (const auto& ns : topo.namespaces) {
    nlohmann::json jn = {{"prefix", ns.prefix}, {"public", ns.is_public}};
    if (!ns.is_public) jn["secret"] = base64_encode(ns.secret);
    j["namespaces"].push_back(std::move(jn));
  }
  return j;
}

inline FederationTopology load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open topology file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw TopologyError(TopologyErrorCode::BadJson, e.what());
  }
  return topology_from_json(j);
}

}  // namespace minifed
