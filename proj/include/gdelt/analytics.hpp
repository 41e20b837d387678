#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gdelt/csv.hpp"
#include "gdelt/date.hpp"
#include "gdelt/parser.hpp"
#include "json.hpp"

namespace gdelt {

// Sum/Count/Avg over GoldsteinScale with missing values tallied separately.
struct GoldsteinAgg {
  double sum = 0.0;
  std::size_t count = 0;
  std::size_t missing = 0;

  void add(const std::optional<double>& g) {
    if (g) {
      sum += *g;
      ++count;
    } else {
      ++missing;
    }
  }
  double avg() const { return count > 0 ? sum / static_cast<double>(count) : 0.0; }
};

struct MonthlyRow {
  YearMonth month;
  int quad_class = 0;  // 0 when not grouped by QuadClass
  GoldsteinAgg agg;
};

// One row per month (and per QuadClass when grouped), sparse: months without
// records produce no row. zero-filled months are a serialization option.
inline std::vector<MonthlyRow> monthly_goldstein(std::span<const EventRecord> records,
                                                 bool group_by_quadclass) {
  std::map<std::pair<YearMonth, int>, GoldsteinAgg> groups;
  for (const auto& r : records) {
    const auto key = std::make_pair(YearMonth::of(r.sql_date),
                                    group_by_quadclass ? r.quad_class : 0);
    groups[key].add(r.goldstein_scale);
  }
  std::vector<MonthlyRow> out;
  out.reserve(groups.size());
  for (const auto& [key, agg] : groups) out.push_back({key.first, key.second, agg});
  return out;
}

struct FilterCriteria {
  std::set<int> quad_classes;                 // empty = any
  std::optional<bool> is_root_event;
  std::vector<std::string> hosts;             // whitelist, matched case-insensitively
  std::optional<Date> date_from, date_to;     // closed range
  std::optional<int> event_flag;              // require the join flag value

  bool empty() const {
    return quad_classes.empty() && !is_root_event && hosts.empty() && !date_from && !date_to &&
           !event_flag;
  }
};

struct BubbleRow {
  YearMonth month;
  GoldsteinAgg agg;
  int event_flag = 0;  // 1 if any included record in the month carries the flag
};

struct BubbleResult {
  std::vector<BubbleRow> rows;
  std::size_t included_records = 0;
  // Records kept despite a host whitelist because they carry no source URL.
  std::size_t host_filter_skipped = 0;
  std::size_t invalid_urls = 0;
};

// Monthly Avg/Sum/Count of GoldsteinScale over records passing the criteria.
// `flags` aligns 1:1 with `records` (from join_same_date/join_window) and may
// be empty, in which case every flag reads 0.
inline BubbleResult bubble_series(std::span<const EventRecord> records,
                                  std::span<const std::uint8_t> flags,
                                  const FilterCriteria& criteria) {
  std::vector<std::string> hosts_lower;
  hosts_lower.reserve(criteria.hosts.size());
  for (const auto& h : criteria.hosts) hosts_lower.push_back(to_lower(h));

  BubbleResult result;
  std::map<YearMonth, BubbleRow> months;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const int flag = (i < flags.size() && flags[i]) ? 1 : 0;
    if (!criteria.quad_classes.empty() && !criteria.quad_classes.count(r.quad_class)) continue;
    if (criteria.is_root_event && r.is_root_event != *criteria.is_root_event) continue;
    if (criteria.date_from && r.sql_date < *criteria.date_from) continue;
    if (criteria.date_to && r.sql_date > *criteria.date_to) continue;
    if (criteria.event_flag && flag != *criteria.event_flag) continue;
    if (!hosts_lower.empty()) {
      if (!r.source_url) {
        // Pre-2013 rows have no sourceURL; the host filter cannot apply.
        ++result.host_filter_skipped;
      } else {
        const auto host = extract_host(r.source_url, result.invalid_urls);
        if (!host) continue;
        if (std::find(hosts_lower.begin(), hosts_lower.end(), *host) == hosts_lower.end())
          continue;
      }
    }
    auto& row = months[YearMonth::of(r.sql_date)];
    row.month = YearMonth::of(r.sql_date);
    row.agg.add(r.goldstein_scale);
    row.event_flag |= flag;
    ++result.included_records;
  }
  result.rows.reserve(months.size());
  for (auto& [m, row] : months) result.rows.push_back(std::move(row));
  return result;
}

struct GeoCell {
  double lat0 = 0.0, lon0 = 0.0;  // south-west corner of the cell
  std::size_t records = 0;
  GoldsteinAgg agg;
};

struct GeomapResult {
  std::vector<GeoCell> cells;
  std::size_t included_records = 0;
  std::size_t no_coordinates = 0;
  std::size_t centroid_excluded = 0;
};

// Groups records by ActionGeo coordinates snapped onto a cell_degrees grid
// (floor snap). Optionally drops rows whose fullname is exactly the bare
// country name, which otherwise pile up on the country centroid.
inline GeomapResult geomap_bins(std::span<const EventRecord> records, double cell_degrees,
                                bool exclude_country_centroid,
                                std::string_view country_name = "Singapore") {
  if (cell_degrees <= 0) throw Error("geomap_bins: cell_degrees must be positive");
  GeomapResult result;
  std::map<std::pair<long long, long long>, GeoCell> cells;
  for (const auto& r : records) {
    if (exclude_country_centroid && r.action_geo.fullname &&
        *r.action_geo.fullname == country_name) {
      ++result.centroid_excluded;
      continue;
    }
    if (!r.action_geo.has_coordinates()) {
      ++result.no_coordinates;
      continue;
    }
    const long long ix = static_cast<long long>(std::floor(*r.action_geo.latitude / cell_degrees));
    const long long iy = static_cast<long long>(std::floor(*r.action_geo.longitude / cell_degrees));
    auto& cell = cells[{ix, iy}];
    cell.lat0 = static_cast<double>(ix) * cell_degrees;
    cell.lon0 = static_cast<double>(iy) * cell_degrees;
    ++cell.records;
    cell.agg.add(r.goldstein_scale);
    ++result.included_records;
  }
  result.cells.reserve(cells.size());
  for (auto& [k, c] : cells) result.cells.push_back(std::move(c));
  return result;
}

// EventRootCode -> EventBaseCode -> EventCode rollup. Nodes carry the record
// count (word-cloud size) and the Goldstein aggregate (treemap color); records
// with a broken prefix chain still roll up under their literal codes.
struct RollupNode {
  std::size_t records = 0;
  GoldsteinAgg agg;
  bool hierarchy_warning = false;
  std::map<std::string, RollupNode> children;
};

struct HierarchyRollup {
  std::map<std::string, RollupNode> roots;
  std::size_t total_records = 0;
};

inline HierarchyRollup hierarchy_rollup(std::span<const EventRecord> records) {
  HierarchyRollup rollup;
  for (const auto& r : records) {
    ++rollup.total_records;
    RollupNode* levels[3];
    levels[0] = &rollup.roots[r.event_root_code];
    levels[1] = &levels[0]->children[r.event_base_code];
    levels[2] = &levels[1]->children[r.event_code];
    for (RollupNode* node : levels) {
      ++node->records;
      node->agg.add(r.goldstein_scale);
      node->hierarchy_warning |= r.hierarchy_violation;
    }
  }
  return rollup;
}

struct LeafCodeRow {
  std::string root_code, base_code, event_code;
  const RollupNode* node = nullptr;
};

// Flat leaf view of the rollup; doubles as the word-cloud dataset
// (size = record count per EventCode, color = Sum(GoldsteinScale)).
inline std::vector<LeafCodeRow> rollup_leaves(const HierarchyRollup& rollup) {
  std::vector<LeafCodeRow> out;
  for (const auto& [root, rnode] : rollup.roots)
    for (const auto& [base, bnode] : rnode.children)
      for (const auto& [code, cnode] : bnode.children) out.push_back({root, base, code, &cnode});
  return out;
}

struct ActorEdge {
  std::string a, b;  // a <= b
  std::size_t weight = 0;
};

// Undirected interaction graph over names that occur at least once in each of
// the two actor roles across the stream. Self-loops are kept.
inline std::vector<ActorEdge> actor_network(std::span<const EventRecord> records) {
  std::set<std::string> role1, role2;
  for (const auto& r : records) {
    if (r.actor1_name) role1.insert(*r.actor1_name);
    if (r.actor2_name) role2.insert(*r.actor2_name);
  }
  std::set<std::string> nodes;
  std::set_intersection(role1.begin(), role1.end(), role2.begin(), role2.end(),
                        std::inserter(nodes, nodes.begin()));

  std::map<std::pair<std::string, std::string>, std::size_t> weights;
  for (const auto& r : records) {
    if (!r.actor1_name || !r.actor2_name) continue;
    if (!nodes.count(*r.actor1_name) || !nodes.count(*r.actor2_name)) continue;
    auto key = std::minmax(*r.actor1_name, *r.actor2_name);
    ++weights[{key.first, key.second}];
  }
  std::vector<ActorEdge> out;
  out.reserve(weights.size());
  for (const auto& [k, w] : weights) out.push_back({k.first, k.second, w});
  return out;
}

// ---- serialization ---------------------------------------------------------

inline void write_monthly_csv(std::ostream& os, std::span<const MonthlyRow> rows,
                              bool grouped, bool zero_fill = false) {
  std::vector<std::string> row;
  row = {"month"};
  if (grouped) row.push_back("quad_class");
  for (const char* m : {"sum_goldstein", "count_goldstein", "avg_goldstein", "missing_goldstein"})
    row.emplace_back(m);
  write_csv_row(os, row);

  auto emit = [&](const MonthlyRow& r) {
    row.clear();
    row.push_back(r.month.str());
    if (grouped) row.push_back(std::string(quad_class_name(r.quad_class)));
    row.push_back(fmt_double(r.agg.sum));
    row.push_back(std::to_string(r.agg.count));
    row.push_back(fmt_double(r.agg.avg()));
    row.push_back(std::to_string(r.agg.missing));
    write_csv_row(os, row);
  };

  if (!zero_fill || rows.empty()) {
    for (const auto& r : rows) emit(r);
    return;
  }
  // Dense month axis for line charts: missing (month, group) cells become zeros.
  std::set<int> quads;
  for (const auto& r : rows) quads.insert(r.quad_class);
  std::map<std::pair<YearMonth, int>, const MonthlyRow*> have;
  for (const auto& r : rows) have[{r.month, r.quad_class}] = &r;
  for (YearMonth m = rows.front().month;; ) {
    for (int q : quads) {
      const auto it = have.find({m, q});
      if (it != have.end())
        emit(*it->second);
      else
        emit(MonthlyRow{m, q, {}});
    }
    if (m == rows.back().month) break;
    m = m.month == 12 ? YearMonth{m.year + 1, 1} : YearMonth{m.year, m.month + 1};
  }
}

inline nlohmann::ordered_json monthly_to_json(std::span<const MonthlyRow> rows, bool grouped) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["month"] = r.month.str();
    if (grouped) j["quad_class"] = quad_class_name(r.quad_class);
    j["sum_goldstein"] = r.agg.sum;
    j["count_goldstein"] = r.agg.count;
    j["avg_goldstein"] = r.agg.avg();
    j["missing_goldstein"] = r.agg.missing;
    arr.push_back(std::move(j));
  }
  return arr;
}

inline void write_bubble_csv(std::ostream& os, const BubbleResult& result) {
  std::vector<std::string> row = {"month",           "avg_goldstein",  "sum_goldstein",
                                  "count_goldstein", "missing_goldstein", "event_flag"};
  write_csv_row(os, row);
  for (const auto& r : result.rows) {
    row = {r.month.str(),
           fmt_double(r.agg.avg()),
           fmt_double(r.agg.sum),
           std::to_string(r.agg.count),
           std::to_string(r.agg.missing),
           std::to_string(r.event_flag)};
    write_csv_row(os, row);
  }
}

inline nlohmann::ordered_json bubble_to_json(const BubbleResult& result) {
  nlohmann::ordered_json j;
  j["included_records"] = result.included_records;
  j["host_filter_skipped"] = result.host_filter_skipped;
  j["invalid_urls"] = result.invalid_urls;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : result.rows) {
    nlohmann::ordered_json e;
    e["month"] = r.month.str();
    e["avg_goldstein"] = r.agg.avg();
    e["sum_goldstein"] = r.agg.sum;
    e["count_goldstein"] = r.agg.count;
    e["missing_goldstein"] = r.agg.missing;
    e["event_flag"] = r.event_flag;
    arr.push_back(std::move(e));
  }
  j["rows"] = std::move(arr);
  return j;
}

inline void write_geomap_csv(std::ostream& os, const GeomapResult& result) {
  std::vector<std::string> row = {"cell_lat", "cell_lon",      "records",
                                  "sum_goldstein", "count_goldstein", "avg_goldstein"};
  write_csv_row(os, row);
  for (const auto& c : result.cells) {
    row = {fmt_double(c.lat0),    fmt_double(c.lon0),          std::to_string(c.records),
           fmt_double(c.agg.sum), std::to_string(c.agg.count), fmt_double(c.agg.avg())};
    write_csv_row(os, row);
  }
}

inline void write_hierarchy_csv(std::ostream& os, const HierarchyRollup& rollup) {
  std::vector<std::string> row = {"level",         "root_code",       "base_code",
                                  "event_code",    "records",         "sum_goldstein",
                                  "count_goldstein", "missing_goldstein", "hierarchy_warning"};
  write_csv_row(os, row);
  auto emit = [&](std::string_view level, const std::string& root, const std::string& base,
                  const std::string& code, const RollupNode& n) {
    row = {std::string(level),
           root,
           base,
           code,
           std::to_string(n.records),
           fmt_double(n.agg.sum),
           std::to_string(n.agg.count),
           std::to_string(n.agg.missing),
           n.hierarchy_warning ? "1" : "0"};
    write_csv_row(os, row);
  };
  for (const auto& [root, rnode] : rollup.roots) {
    emit("root", root, "", "", rnode);
    for (const auto& [base, bnode] : rnode.children) {
      emit("base", root, base, "", bnode);
      for (const auto& [code, cnode] : bnode.children) emit("code", root, base, code, cnode);
    }
  }
}

inline void write_actor_csv(std::ostream& os, std::span<const ActorEdge> edges) {
  std::vector<std::string> row = {"actor_a", "actor_b", "weight"};
  write_csv_row(os, row);
  for (const auto& e : edges) {
    row = {e.a, e.b, std::to_string(e.weight)};
    write_csv_row(os, row);
  }
}

}  // namespace gdelt
