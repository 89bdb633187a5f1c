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
#include <ctime>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "minifed/records.hpp"
#include "minifed/topology.hpp"

namespace minifed {

// Usage accounting over the collector's record log: f-close records only,
// grouped by resolved namespace and UTC month. Records under no registered
// prefix land in "/_unknown".

inline constexpr const char* kUnknownNamespace = "/_unknown";

struct AccountingCell {
  uint64_t transfers = 0;
  uint64_t bytes = 0;

  friend bool operator==(const AccountingCell&,
                         const AccountingCell&) = default;
};

struct AccountingTable {
  // (namespace prefix, "YYYY-MM") → totals
  std::map<std::pair<std::string, std::string>, AccountingCell> rows;
  uint64_t corrupt_lines = 0;

  friend bool operator==(const AccountingTable& a, const AccountingTable& b) {
    return a.rows == b.rows;
  }
};

inline std::string month_of_ms(int64_t ts_ms) {
  std::time_t secs = ts_ms / 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", tm.tm_year + 1900,
                tm.tm_mon + 1);
  return buf;
}

inline AccountingTable aggregate(
    std::istream& log, const std::vector<NamespaceSpec>& namespaces,
    const std::optional<std::string>& month_filter = std::nullopt) {
  AccountingTable table;
  std::string line;
  while (std::getline(log, line)) {
    if (line.empty()) continue;
    MonitorRecord r;
    try {
      r = decode_monitor_record(line);
    } catch (const ProtocolError&) {
      ++table.corrupt_lines;
      continue;
    }
    if (r.stream != Stream::F || r.event != RecordEvent::Close) continue;
    std::string month = month_of_ms(r.ts_ms);
    if (month_filter && month != *month_filter) continue;
    std::string ns = kUnknownNamespace;
    if (!r.path.empty() && r.path[0] == '/') {
      if (const NamespaceSpec* spec = resolve_namespace(r.path, namespaces)) {
        ns = spec->prefix;
      }
    }
    auto& cell = table.rows[{ns, month}];
    ++cell.transfers;
    cell.bytes += r.bytes;
  }
  return table;
}

enum class RankMetric { Transfers, Bytes };

inline std::optional<RankMetric> parse_metric(std::string_view s) {
  if (s == "transfers") return RankMetric::Transfers;
  if (s == "bytes") return RankMetric::Bytes;
  return std::nullopt;
}

struct RankedRow {
  std::string ns;  // "Other" for the remainder row
  AccountingCell cell;
};

/// Collapses months, ranks namespaces descending by `metric` (ties break
/// on namespace), keeps the top n and folds the remainder into "Other".
inline std::vector<RankedRow> top_namespaces(const AccountingTable& table,
                                             std::size_t n,
                                             RankMetric metric) {
  if (n < 1) throw InputError("top_namespaces: n must be >= 1");
  std::map<std::string, AccountingCell> totals;
  for (const auto& [key, cell] : table.rows) {
    auto& t = totals[key.first];
    t.transfers += cell.transfers;
    t.bytes += cell.bytes;
  }
  std::vector<RankedRow> rows;
  rows.reserve(totals.size());
  for (auto& [ns, cell] : totals) rows.push_back({ns, cell});
  auto value = [metric](const RankedRow& r) {
    return metric == RankMetric::Bytes ? r.cell.bytes : r.cell.transfers;
  };
  std::sort(rows.begin(), rows.end(),
            [&](const RankedRow& a, const RankedRow& b) {
              if (value(a) != value(b)) return value(a) > value(b);
              return a.ns < b.ns;
            });
  if (rows.size() <= n) return rows;
  RankedRow other{"Other", {}};
  for (std::size_t i = n; i < rows.size(); ++i) {
    other.cell.transfers += rows[i].cell.transfers;
    other.cell.bytes += rows[i].cell.bytes;
  }
  rows.resize(n);
  rows.push_back(std::move(other));
  return rows;
}

inline std::string render_table_text(const AccountingTable& table) {
  std::size_t ns_width = std::string("namespace").size();
  for (const auto& [key, cell] : table.rows) {
    ns_width = std::max(ns_width, key.first.size());
  }
  std::ostringstream out;
  out << std::left << std::setw(int(ns_width)) << "namespace" << "  "
      << std::setw(7) << "month" << "  " << std::right << std::setw(12)
      << "transfers" << "  " << std::setw(16) << "bytes" << "\n";
  for (const auto& [key, cell] : table.rows) {
    out << std::left << std::setw(int(ns_width)) << key.first << "  "
        << std::setw(7) << key.second << "  " << std::right << std::setw(12)
        << cell.transfers << "  " << std::setw(16) << cell.bytes << "\n";
  }
  return out.str();
}

inline std::string render_table_csv(const AccountingTable& table) {
  std::ostringstream out;
  out << "namespace,month,transfers,bytes\n";
  for (const auto& [key, cell] : table.rows) {
    out << key.first << "," << key.second << "," << cell.transfers << ","
        << cell.bytes << "\n";
  }
  return out.str();
}

inline std::string render_ranked_text(const std::vector<RankedRow>& rows) {
  std::size_t ns_width = std::string("namespace").size();
  for (const auto& r : rows) ns_width = std::max(ns_width, r.ns.size());
  std::ostringstream out;
  out << std::left << std::setw(int(ns_width)) << "namespace" << "  "
      << std::right << std::setw(12) << "transfers" << "  " << std::setw(16)
      << "bytes" << "\n";
  for (const auto& r : rows) {
    out << std::left << std::setw(int(ns_width)) << r.ns << "  " << std::right
        << std::setw(12) << r.cell.transfers << "  " << std::setw(16)
        << r.cell.bytes << "\n";
  }
  return out.str();
}

inline std::string render_ranked_csv(const std::vector<RankedRow>& rows) {
  std::ostringstream out;
  out << "namespace,transfers,bytes\n";
  for (const auto& r : rows) {
    out << r.ns << "," << r.cell.transfers << "," << r.cell.bytes << "\n";
  }
  return out.str();
}

}  // namespace minifed
