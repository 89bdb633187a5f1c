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

#include "minifed/redirector.hpp"

#include <random>

#include <gtest/gtest.h>

namespace minifed {
namespace {

constexpr int64_t kWindow = 30'000;

TEST(RoutingTable, RegisteredPrefixResolves) {
  RoutingTable table(kWindow);
  table.register_origin("origin-a", {"h", 1}, {"/ligo"}, 1000);
  auto endpoint = table.locate("/ligo/x", 1000);
  ASSERT_TRUE(endpoint.has_value());
  EXPECT_EQ(endpoint->str(), "h:1");
}

TEST(RoutingTable, ConflictingClaimRejectedAndTableUnchanged) {
  RoutingTable table(kWindow);
  table.register_origin("origin-a", {"h", 1}, {"/ligo"}, 1000);
  EXPECT_THROW(
      table.register_origin("origin-b", {"h", 2}, {"/nova", "/ligo"}, 1000),
      RegistrationError);
  EXPECT_EQ(table.locate("/ligo/x", 1000)->str(), "h:1");
  EXPECT_FALSE(table.locate("/nova/x", 1000).has_value());  // rolled back
}

TEST(RoutingTable, ReRegistrationRefreshesLastSeen) {
  RoutingTable table(kWindow);
  table.register_origin("origin-a", {"h", 1}, {"/ligo"}, 1000);
  table.register_origin("origin-a", {"h", 1}, {"/ligo"}, 20'000);
  // Fresh enough thanks to the refresh at t=20s.
  EXPECT_TRUE(table.locate("/ligo/x", 40'000).has_value());
}

TEST(RoutingTable, UnknownPathIsNotFound) {
  RoutingTable table(kWindow);
  table.register_origin("origin-a", {"h", 1}, {"/ligo"}, 1000);
  EXPECT_FALSE(table.locate("/unknown/x", 1000).has_value());
}

TEST(RoutingTable, StaleOwnerIsNotFound) {
  RoutingTable table(kWindow);
  table.register_origin("origin-a", {"h", 1}, {"/ligo"}, 1000);
  EXPECT_FALSE(table.locate("/ligo/a", 1000 + kWindow + 1).has_value());
}

TEST(RoutingTable, BoundaryIsStrictlyGreater) {
  RoutingTable table(kWindow);
  table.register_origin("origin-a", {"h", 1}, {"/ligo"}, 1000);
  // Exactly at the window: retained.
  EXPECT_TRUE(table.locate("/ligo/a", 1000 + kWindow).has_value());
  EXPECT_TRUE(table.prune_stale(1000 + kWindow).empty());
  // One past: pruned.
  auto removed = table.prune_stale(1000 + kWindow + 1);
  ASSERT_EQ(removed.size(), 1u);
  EXPECT_EQ(removed[0], "origin-a");
  EXPECT_EQ(table.registered_count(), 0u);
}

TEST(RoutingTable, PruneOnEmptyTable) {
  RoutingTable table(kWindow);
  EXPECT_TRUE(table.prune_stale(99'999).empty());
}

TEST(RoutingTable, LongestPrefixWins) {
  RoutingTable table(kWindow);
  table.register_origin("origin-a", {"a", 1}, {"/data"}, 1000);
  table.register_origin("origin-b", {"b", 2}, {"/data/hot"}, 1000);
  EXPECT_EQ(table.locate("/data/hot/x", 1000)->str(), "b:2");
  EXPECT_EQ(table.locate("/data/cold/x", 1000)->str(), "a:1");
}

TEST(RoutingTable, LocateIsPureGivenFixedState) {
  RoutingTable table(kWindow);
  table.register_origin("origin-a", {"h", 1}, {"/ligo"}, 1000);
  auto first = table.locate("/ligo/x", 2000);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(table.locate("/ligo/x", 2000), first);
  }
}

// For every registered prefix and every path under it, locate returns the
// owner while live — brute force over a random table.
TEST(RoutingTable, OwnerPropertyOverRandomTables) {
  std::mt19937_64 rng(73);
  const std::vector<std::string> segs = {"p", "q", "r", "s"};
  for (int iter = 0; iter < 100; ++iter) {
    RoutingTable table(kWindow);
    std::map<std::string, std::string> owners;  // prefix → origin
    int n = 1 + int(rng() % 5);
    for (int i = 0; i < n; ++i) {
      std::string prefix;
      int depth = 1 + int(rng() % 2);
      for (int d = 0; d < depth; ++d) prefix += "/" + segs[rng() % segs.size()];
      if (owners.count(prefix)) continue;
      std::string id = "origin-" + std::to_string(i);
      try {
        table.register_origin(id, {"h", uint16_t(i + 1)}, {prefix}, 0);
        owners[prefix] = id;
      } catch (const RegistrationError&) {
      }
    }
    for (const auto& [prefix, id] : owners) {
      std::string path = prefix + "/" + segs[rng() % segs.size()];
      // Longest-prefix semantics: find the brute-force winner.
      std::string best;
      std::size_t best_len = 0;
      for (const auto& [p, o] : owners) {
        if (prefix_matches(p, path) && p.size() > best_len) {
          best = o;
          best_len = p.size();
        }
      }
      auto got = table.locate(path, 0);
      ASSERT_TRUE(got.has_value()) << path;
      uint16_t want_port = 0;
      for (const auto& [p, o] : owners) {
        if (o == best) {
          want_port = uint16_t(std::stoi(o.substr(7)) + 1);
        }
      }
      EXPECT_EQ(got->port, want_port) << path;
    }
  }
}

}  // namespace
}  // namespace minifed
