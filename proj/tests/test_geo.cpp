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

#include "minifed/geo.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

namespace minifed {
namespace {

// Test-local haversine, written independently of the library's, for the
// brute-force ordering oracle.
double oracle_km(double lat1, double lon1, double lat2, double lon2) {
  auto rad = [](double deg) { return deg * M_PI / 180.0; };
  double u = std::sin(rad(lat2 - lat1) / 2.0);
  double v = std::sin(rad(lon2 - lon1) / 2.0);
  double a = u * u + std::cos(rad(lat1)) * std::cos(rad(lat2)) * v * v;
  return 2.0 * 6371.0 * std::asin(std::sqrt(a));
}

Coord random_coord(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lat(-90.0, 90.0);
  std::uniform_real_distribution<double> lon(-180.0, 180.0);
  return {lat(rng), lon(rng)};
}

TEST(GreatCircle, IdentityIsZero) {
  EXPECT_DOUBLE_EQ(great_circle_km({0, 0}, {0, 0}), 0.0);
  std::mt19937_64 rng(41);
  for (int i = 0; i < 100; ++i) {
    Coord c = random_coord(rng);
    EXPECT_NEAR(great_circle_km(c, c), 0.0, 1e-9);
  }
}

TEST(GreatCircle, QuarterCircleFromEquatorToPole) {
  // πR/2 with R = 6371.0
  EXPECT_NEAR(great_circle_km({0, 0}, {90, 0}), 10007.543398, 0.01);
}

TEST(GreatCircle, SdscToLincoln) {
  // Pinned with an independent great-circle calculator.
  EXPECT_NEAR(great_circle_km({32.88, -117.23}, {40.82, -96.70}), 2022.17,
              1.0);
}

TEST(GreatCircle, Symmetry) {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 200; ++i) {
    Coord a = random_coord(rng), b = random_coord(rng);
    EXPECT_NEAR(great_circle_km(a, b), great_circle_km(b, a), 1e-9);
  }
}

TEST(GreatCircle, TriangleInequality) {
  std::mt19937_64 rng(47);
  for (int i = 0; i < 200; ++i) {
    Coord a = random_coord(rng), b = random_coord(rng), c = random_coord(rng);
    EXPECT_LE(great_circle_km(a, c),
              great_circle_km(a, b) + great_circle_km(b, c) + 1e-6);
  }
}

TEST(GreatCircle, RejectsOutOfRange) {
  EXPECT_THROW(great_circle_km({91, 0}, {0, 0}), InputError);
  EXPECT_THROW(great_circle_km({0, 181}, {0, 0}), InputError);
  EXPECT_THROW(great_circle_km({0, 0}, {-91, 0}), InputError);
  EXPECT_THROW(great_circle_km({NAN, 0}, {0, 0}), InputError);
}

CacheSpec cache_at(const std::string& id, double lat, double lon) {
  CacheSpec c;
  c.id = id;
  c.latitude = lat;
  c.longitude = lon;
  c.capacity_bytes = 1;
  return c;
}

TEST(NearestCaches, SingleCache) {
  std::vector<CacheSpec> caches = {cache_at("only", 10, 10)};
  EXPECT_EQ(nearest_caches({0, 0}, caches),
            std::vector<std::string>({"only"}));
}

TEST(NearestCaches, TieBreaksLexicographically) {
  std::vector<CacheSpec> caches = {cache_at("b", 10, 10),
                                   cache_at("a", 10, 10)};
  EXPECT_EQ(nearest_caches({0, 0}, caches),
            std::vector<std::string>({"a", "b"}));
}

TEST(NearestCaches, EmptyListIsInputError) {
  EXPECT_THROW(nearest_caches({0, 0}, {}), InputError);
}

TEST(NearestCaches, MatchesBruteForceOracle) {
  std::mt19937_64 rng(53);
  for (int iter = 0; iter < 50; ++iter) {
    Coord client = random_coord(rng);
    std::vector<CacheSpec> caches;
    int n = 1 + int(rng() % 50);
    for (int i = 0; i < n; ++i) {
      Coord c = random_coord(rng);
      caches.push_back(
          cache_at("cache-" + std::to_string(i), c.lat, c.lon));
    }
    std::vector<std::string> got = nearest_caches(client, caches);

    // Brute force: repeatedly select the closest remaining cache.
    std::vector<CacheSpec> remaining = caches;
    std::vector<std::string> want;
    while (!remaining.empty()) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < remaining.size(); ++i) {
        double di = oracle_km(client.lat, client.lon, remaining[i].latitude,
                              remaining[i].longitude);
        double db = oracle_km(client.lat, client.lon,
                              remaining[best].latitude,
                              remaining[best].longitude);
        if (di < db || (di == db && remaining[i].id < remaining[best].id)) {
          best = i;
        }
      }
      want.push_back(remaining[best].id);
      remaining.erase(remaining.begin() + long(best));
    }
    EXPECT_EQ(got, want);

    // Permutation: nothing dropped, nothing duplicated.
    std::vector<std::string> sorted_got = got;
    std::sort(sorted_got.begin(), sorted_got.end());
    std::vector<std::string> sorted_ids;
    for (const auto& c : caches) sorted_ids.push_back(c.id);
    std::sort(sorted_ids.begin(), sorted_ids.end());
    EXPECT_EQ(sorted_got, sorted_ids);
  }
}

}  // namespace
}  // namespace minifed
