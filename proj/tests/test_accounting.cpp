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

#include "minifed/accounting.hpp"

#include <random>
#include <sstream>

#include <gtest/gtest.h>

namespace minifed {
namespace {

std::string f_close_line(const std::string& host, const std::string& path,
                         uint64_t bytes, int64_t ts_ms) {
  MonitorRecord r;
  r.stream = Stream::F;
  r.event = RecordEvent::Close;
  r.ts_ms = ts_ms;
  r.host = host;
  r.component = "cache";
  r.path = path;
  r.bytes = bytes;
  r.duration_ms = 1;
  r.client = "c";
  r.xfer_id = host + "-" + std::to_string(ts_ms) + "-" + path;
  return encode_monitor_record(r);
}

std::string g_hit_line(const std::string& path, int64_t ts_ms) {
  MonitorRecord r;
  r.stream = Stream::G;
  r.event = RecordEvent::Hit;
  r.ts_ms = ts_ms;
  r.host = "cache-a";
  r.component = "cache";
  r.path = path;
  r.bytes = 1;
  r.client = "";
  r.xfer_id = "g-" + std::to_string(ts_ms);
  return encode_monitor_record(r);
}

const std::vector<NamespaceSpec> kTable = {{"/ligo", true, ""},
                                           {"/nova", true, ""}};

// 2023-06-15T00:00:00Z
constexpr int64_t kJune = 1686787200000;

TEST(MonthOfMs, UtcMonths) {
  EXPECT_EQ(month_of_ms(kJune), "2023-06");
  EXPECT_EQ(month_of_ms(0), "1970-01");
  // One ms before the month boundary stays in the old month.
  // 2023-07-01T00:00:00Z = 1688169600000
  EXPECT_EQ(month_of_ms(1688169600000 - 1), "2023-06");
  EXPECT_EQ(month_of_ms(1688169600000), "2023-07");
}

TEST(Aggregate, SumsFCloseByNamespace) {
  std::stringstream log;
  log << f_close_line("cache-a", "/ligo/a", 100, kJune) << "\n"
      << f_close_line("cache-a", "/ligo/b", 50, kJune) << "\n"
      << f_close_line("cache-a", "/nova/x", 10, kJune) << "\n";
  AccountingTable table = aggregate(log, kTable);
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ((table.rows.at({"/ligo", "2023-06"})),
            (AccountingCell{2, 150}));
  EXPECT_EQ((table.rows.at({"/nova", "2023-06"})), (AccountingCell{1, 10}));
}

TEST(Aggregate, EmptyLogYieldsEmptyTable) {
  std::stringstream log;
  AccountingTable table = aggregate(log, kTable);
  EXPECT_TRUE(table.rows.empty());
}

TEST(Aggregate, IgnoresNonFCloseRecords) {
  std::stringstream log;
  log << g_hit_line("/ligo/a", kJune) << "\n"
      << f_close_line("cache-a", "/ligo/a", 5, kJune) << "\n";
  AccountingTable table = aggregate(log, kTable);
  EXPECT_EQ((table.rows.at({"/ligo", "2023-06"})), (AccountingCell{1, 5}));
}

TEST(Aggregate, CorruptLinesSkippedAndCounted) {
  std::stringstream log;
  log << "garbage not json\n"
      << f_close_line("cache-a", "/ligo/a", 5, kJune) << "\n"
      << "{\"stream\":\"f\"}\n";
  AccountingTable table = aggregate(log, kTable);
  EXPECT_EQ(table.corrupt_lines, 2u);
  EXPECT_EQ((table.rows.at({"/ligo", "2023-06"})), (AccountingCell{1, 5}));
}

TEST(Aggregate, UnresolvedPathsGroupUnderUnknown) {
  std::stringstream log;
  log << f_close_line("cache-a", "/elsewhere/a", 7, kJune) << "\n";
  AccountingTable table = aggregate(log, kTable);
  EXPECT_EQ((table.rows.at({kUnknownNamespace, "2023-06"})),
            (AccountingCell{1, 7}));
}

TEST(Aggregate, MonthFilter) {
  std::stringstream log;
  log << f_close_line("cache-a", "/ligo/a", 1, kJune) << "\n"
      << f_close_line("cache-a", "/ligo/b", 2, kJune + 45ll * 86400 * 1000)
      << "\n";
  AccountingTable table = aggregate(log, kTable, std::string("2023-06"));
  ASSERT_EQ(table.rows.size(), 1u);
  EXPECT_EQ((table.rows.at({"/ligo", "2023-06"})), (AccountingCell{1, 1}));
}

TEST(Aggregate, PrefixOfLogYieldsSubTable) {
  std::mt19937_64 rng(61);
  std::vector<std::string> lines;
  for (int i = 0; i < 500; ++i) {
    std::string path = (rng() % 2 ? "/ligo/" : "/nova/") +
                       std::to_string(rng() % 20);
    lines.push_back(f_close_line("cache-a", path, rng() % 1000,
                                 kJune + int64_t(i) * 1000));
  }
  std::stringstream full_log, prefix_log;
  for (const auto& l : lines) full_log << l << "\n";
  for (std::size_t i = 0; i < 250; ++i) prefix_log << lines[i] << "\n";
  AccountingTable full = aggregate(full_log, kTable);
  AccountingTable prefix = aggregate(prefix_log, kTable);
  for (const auto& [key, cell] : prefix.rows) {
    ASSERT_TRUE(full.rows.count(key));
    EXPECT_LE(cell.transfers, full.rows.at(key).transfers);
    EXPECT_LE(cell.bytes, full.rows.at(key).bytes);
  }
}

// Table equals an independent naive recount over the same log.
TEST(Aggregate, MatchesNaiveRecountOnSyntheticLog) {
  std::mt19937_64 rng(67);
  std::stringstream log;
  std::map<std::pair<std::string, std::string>, AccountingCell> want;
  for (int i = 0; i < 3000; ++i) {
    bool ligo = rng() % 2;
    std::string path =
        (ligo ? "/ligo/f" : "/nova/f") + std::to_string(rng() % 30);
    uint64_t bytes = rng() % 10000;
    int64_t ts = kJune + int64_t(rng() % (90ll * 86400 * 1000));
    log << f_close_line("cache-a", path, bytes, ts) << "\n";
    auto& cell = want[{ligo ? "/ligo" : "/nova", month_of_ms(ts)}];
    ++cell.transfers;
    cell.bytes += bytes;
  }
  AccountingTable table = aggregate(log, kTable);
  EXPECT_EQ(table.rows, want);
}

TEST(TopNamespaces, SpecExample) {
  std::stringstream log;
  log << f_close_line("cache-a", "/ligo/a", 100, kJune) << "\n"
      << f_close_line("cache-a", "/ligo/b", 50, kJune) << "\n"
      << f_close_line("cache-a", "/nova/x", 10, kJune) << "\n";
  AccountingTable table = aggregate(log, kTable);
  auto rows = top_namespaces(table, 1, RankMetric::Bytes);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].ns, "/ligo");
  EXPECT_EQ(rows[0].cell.bytes, 150u);
  EXPECT_EQ(rows[1].ns, "Other");
  EXPECT_EQ(rows[1].cell.bytes, 10u);
}

TEST(TopNamespaces, NoOtherRowWhenEverythingFits) {
  std::stringstream log;
  log << f_close_line("cache-a", "/ligo/a", 1, kJune) << "\n";
  AccountingTable table = aggregate(log, kTable);
  auto rows = top_namespaces(table, 5, RankMetric::Bytes);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].ns, "/ligo");
}

TEST(TopNamespaces, MatchesSortOracleOnRandomTables) {
  std::mt19937_64 rng(71);
  for (int iter = 0; iter < 100; ++iter) {
    AccountingTable table;
    int n = 1 + int(rng() % 12);
    for (int i = 0; i < n; ++i) {
      table.rows[{"/ns" + std::to_string(i), "2023-06"}] =
          AccountingCell{rng() % 100, rng() % 10000};
    }
    std::size_t top_n = 1 + rng() % 6;
    auto rows = top_namespaces(table, top_n, RankMetric::Transfers);

    std::vector<std::pair<std::string, AccountingCell>> oracle;
    for (const auto& [key, cell] : table.rows) oracle.push_back({key.first, cell});
    std::sort(oracle.begin(), oracle.end(), [](const auto& a, const auto& b) {
      if (a.second.transfers != b.second.transfers) {
        return a.second.transfers > b.second.transfers;
      }
      return a.first < b.first;
    });
    std::size_t expected =
        std::min(top_n, oracle.size()) + (oracle.size() > top_n ? 1 : 0);
    ASSERT_EQ(rows.size(), expected);
    for (std::size_t i = 0; i < std::min(top_n, oracle.size()); ++i) {
      EXPECT_EQ(rows[i].ns, oracle[i].first);
      EXPECT_EQ(rows[i].cell, oracle[i].second);
    }
    uint64_t total_in = 0, total_out = 0;
    for (const auto& [key, cell] : table.rows) total_in += cell.transfers;
    for (const auto& r : rows) total_out += r.cell.transfers;
    EXPECT_EQ(total_in, total_out);  // Other folds the remainder exactly
  }
}

TEST(Render, CsvShape) {
  std::stringstream log;
  log << f_close_line("cache-a", "/ligo/a", 100, kJune) << "\n";
  AccountingTable table = aggregate(log, kTable);
  EXPECT_EQ(render_table_csv(table),
            "namespace,month,transfers,bytes\n/ligo,2023-06,1,100\n");
  auto rows = top_namespaces(table, 1, RankMetric::Bytes);
  EXPECT_EQ(render_ranked_csv(rows),
            "namespace,transfers,bytes\n/ligo,1,100\n");
}

}  // namespace
}  // namespace minifed
