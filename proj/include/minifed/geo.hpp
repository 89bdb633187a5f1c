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
#include <cmath>
#include <string>
#include <vector>

#include "minifed/errors.hpp"
#include "minifed/topology.hpp"

namespace minifed {

inline constexpr double kEarthRadiusKm = 6371.0;

struct Coord {
  double lat = 0.0;
  double lon = 0.0;
};

inline void check_coord(const Coord& c) {
  if (!(c.lat >= -90.0 && c.lat <= 90.0) ||
      !(c.lon >= -180.0 && c.lon <= 180.0)) {
    throw InputError("coordinate out of range: " + std::to_string(c.lat) +
                     "," + std::to_string(c.lon));
  }
}

/// Haversine great-circle distance on a sphere of mean Earth radius.
inline double great_circle_km(const Coord& a, const Coord& b) {
  check_coord(a);
  check_coord(b);
  constexpr double kRad = M_PI / 180.0;
  double phi1 = a.lat * kRad;
  double phi2 = b.lat * kRad;
  double dphi = (b.lat - a.lat) * kRad;
  double dlam = (b.lon - a.lon) * kRad;
  double h = std::sin(dphi / 2) * std::sin(dphi / 2) +
             std::cos(phi1) * std::cos(phi2) * std::sin(dlam / 2) *
                 std::sin(dlam / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

/// Cache ids ordered by ascending distance from `client`; ties break on
/// lexicographic id so the ordering is total and reproducible.
inline std::vector<std::string> nearest_caches(
    const Coord& client, const std::vector<CacheSpec>& caches) {
  if (caches.empty()) throw InputError("nearest_caches: no caches");
  check_coord(client);
  std::vector<std::pair<double, std::string>> order;
  order.reserve(caches.size());
  for (const auto& c : caches) {
    order.emplace_back(
        great_circle_km(client, Coord{c.latitude, c.longitude}), c.id);
  }
  std::sort(order.begin(), order.end());
  std::vector<std::string> ids;
  ids.reserve(order.size());
  for (auto& [d, id] : order) ids.push_back(std::move(id));
  return ids;
}

}  // namespace minifed
