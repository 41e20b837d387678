#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gdelt/csv.hpp"
#include "gdelt/date.hpp"
#include "gdelt/error.hpp"
#include "gdelt/featurize.hpp"
#include "gdelt/ingest.hpp"
#include "json.hpp"

namespace gdelt {

enum class LagPolicy { next_calendar_day, next_trading_day };

inline std::string_view lag_policy_name(LagPolicy p) {
  return p == LagPolicy::next_calendar_day ? "calendar" : "trading";
}
inline std::optional<LagPolicy> lag_policy_from_name(std::string_view s) {
  if (s == "calendar") return LagPolicy::next_calendar_day;
  if (s == "trading") return LagPolicy::next_trading_day;
  return std::nullopt;
}

// Supervised table: features at day t, target = adjusted close at the next
// trading (or calendar) day. prev_close carries the last close at or before t
// for the persistence baseline.
struct TrainingTable {
  std::vector<std::string> feature_names;
  std::vector<Date> dates;
  std::vector<double> features;  // rows x feature_names, row-major
  std::vector<double> target;
  std::vector<std::optional<double>> prev_close;
  std::size_t dropped_rows = 0;  // feature dates without a resolvable target

  std::size_t n_rows() const { return dates.size(); }
  std::size_t n_features() const { return feature_names.size(); }
  double feature(std::size_t r, std::size_t c) const {
    return features[r * feature_names.size() + c];
  }
  std::span<const double> row(std::size_t r) const {
    return {features.data() + r * feature_names.size(), feature_names.size()};
  }

  void write_csv(std::ostream& os) const {
    std::vector<std::string> row_out;
    row_out = {"date", "target", "prev_close"};
    for (const auto& f : feature_names) row_out.push_back(f);
    write_csv_row(os, row_out);
    for (std::size_t r = 0; r < n_rows(); ++r) {
      row_out.clear();
      row_out.push_back(to_iso(dates[r]));
      row_out.push_back(fmt_double(target[r]));
      row_out.push_back(prev_close[r] ? fmt_double(*prev_close[r]) : "");
      for (std::size_t c = 0; c < n_features(); ++c) row_out.push_back(fmt_double(feature(r, c)));
      write_csv_row(os, row_out);
    }
  }
};

inline TrainingTable read_training_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw Error("training table: empty input");
  if (row.size() < 3 || row[0] != "date" || row[1] != "target" || row[2] != "prev_close")
    throw Error("training table: unexpected header");
  TrainingTable t;
  t.feature_names.assign(row.begin() + 3, row.end());
  std::size_t line = 1;
  while (reader.next(row)) {
    ++line;
    if (row.size() != t.feature_names.size() + 3)
      throw Error("training table: wrong field count at line " + std::to_string(line));
    const auto d = date_from_iso(row[0]);
    if (!d) throw Error("training table: bad date at line " + std::to_string(line));
    t.dates.push_back(*d);
    double v = 0;
    if (!detail::parse_f64(row[1], v))
      throw Error("training table: bad target at line " + std::to_string(line));
    t.target.push_back(v);
    if (row[2].empty()) {
      t.prev_close.push_back(std::nullopt);
    } else {
      if (!detail::parse_f64(row[2], v))
        throw Error("training table: bad prev_close at line " + std::to_string(line));
      t.prev_close.push_back(v);
    }
    for (std::size_t c = 0; c < t.feature_names.size(); ++c) {
      if (!detail::parse_f64(row[c + 3], v))
        throw Error("training table: bad feature value at line " + std::to_string(line));
      t.features.push_back(v);
    }
  }
  return t;
}

// Joins a day-resolution feature table to the market series with a 1-day lag.
// next_trading_day takes the first bar strictly after t; next_calendar_day
// requires a bar at exactly t+1 and drops the row when the market was closed.
// With target_diff the target becomes the change from the last known close to
// the next close instead of the raw level.
inline TrainingTable build_training_table(const FeatureTable& features, const MarketSeries& market,
                                          LagPolicy policy, bool target_diff = false) {
  if (features.resolution != Resolution::day)
    throw Error("build_training_table: feature table must use day resolution");
  if (features.n_rows() == 0) throw Error("build_training_table: empty feature table");
  if (market.bars.empty()) throw Error("build_training_table: empty market series");

  std::vector<Date> bar_dates;
  bar_dates.reserve(market.bars.size());
  for (const auto& b : market.bars) bar_dates.push_back(b.date);

  TrainingTable table;
  for (const auto& c : features.columns) table.feature_names.push_back(c.name);

  for (std::size_t r = 0; r < features.n_rows(); ++r) {
    const Date t = features.rows[r];
    std::optional<double> target;
    if (policy == LagPolicy::next_trading_day) {
      const auto it = std::upper_bound(bar_dates.begin(), bar_dates.end(), t);
      if (it != bar_dates.end())
        target = market.bars[static_cast<std::size_t>(it - bar_dates.begin())].adj_close;
    } else {
      const Date want = t + Days{1};
      const auto it = std::lower_bound(bar_dates.begin(), bar_dates.end(), want);
      if (it != bar_dates.end() && *it == want)
        target = market.bars[static_cast<std::size_t>(it - bar_dates.begin())].adj_close;
    }
    if (!target) {
      ++table.dropped_rows;
      continue;
    }
    // Last close at or before t, for the persistence baseline.
    std::optional<double> prev;
    const auto it = std::upper_bound(bar_dates.begin(), bar_dates.end(), t);
    if (it != bar_dates.begin())
      prev = market.bars[static_cast<std::size_t>(it - bar_dates.begin()) - 1].adj_close;
    if (target_diff) {
      if (!prev) {
        ++table.dropped_rows;
        continue;
      }
      *target -= *prev;
    }
    table.dates.push_back(t);
    table.target.push_back(*target);
    table.prev_close.push_back(prev);
    for (std::size_t c = 0; c < features.n_cols(); ++c)
      table.features.push_back(features.cell(r, c));
  }
  if (table.n_rows() == 0) throw Error("build_training_table: zero resolvable rows");
  return table;
}

struct TreeHyperparams {
  int max_depth = 6;
  std::size_t min_leaf_rows = 5;
  double min_gain = 0.0;
};

struct TreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // x[feature] < threshold goes left
  int left = -1, right = -1;
  double mean = 0.0;
  std::size_t rows = 0;
  double sse = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // root at index 0
  TreeHyperparams params;
  std::vector<std::string> feature_names;
  std::vector<double> importance;  // per-feature total SSE reduction
  std::uint64_t schema_hash = 0;

  double predict(std::span<const double> x) const {
    if (x.size() != feature_names.size())
      throw Error("predict: feature vector length " + std::to_string(x.size()) +
                  " does not match schema of " + std::to_string(feature_names.size()));
    int n = 0;
    while (!nodes[static_cast<std::size_t>(n)].is_leaf()) {
      const auto& node = nodes[static_cast<std::size_t>(n)];
      n = x[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(n)].mean;
  }

  double total_gain() const {
    double g = 0.0;
    for (double v : importance) g += v;
    return g;
  }

  std::vector<std::pair<std::string, double>> top_features(std::size_t n) const {
    std::vector<std::size_t> order(importance.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (importance[a] != importance[b]) return importance[a] > importance[b];
      return a < b;
    });
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t i = 0; i < std::min(n, order.size()); ++i) {
      if (importance[order[i]] <= 0.0) break;
      out.push_back({feature_names[order[i]], importance[order[i]]});
    }
    return out;
  }
};

inline std::uint64_t schema_hash(std::span<const std::string> names) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (const auto& name : names) {
    for (char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    h ^= 0x1f;
    h *= 1099511628211ull;
  }
  return h;
}

namespace detail {

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

struct TreeBuilder {
  const TrainingTable& table;
  TreeHyperparams params;
  TreeModel& model;

  // Exhaustive greedy search: thresholds at midpoints of consecutive distinct
  // sorted feature values; ties resolved toward the lowest feature index, then
  // the lowest threshold (features and thresholds scan in ascending order and
  // only strictly better gains replace the incumbent). Targets are centered at
  // the node mean before the prefix sums to keep the SSE arithmetic stable.
  SplitChoice best_split(std::span<const std::size_t> rows, double node_mean, double node_sse) {
    SplitChoice best;
    const std::size_t n = rows.size();
    // Guard against floating-point ghosts masquerading as gains.
    const double gain_floor = 1e-12 * std::max(1.0, node_sse);
    std::vector<std::size_t> order(rows.begin(), rows.end());
    for (std::size_t f = 0; f < table.n_features(); ++f) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double xa = table.feature(a, f), xb = table.feature(b, f);
        if (xa != xb) return xa < xb;
        return a < b;
      });
      double sum_left = 0.0, sq_left = 0.0;
      double sum_total = 0.0, sq_total = 0.0;
      for (const auto r : order) {
        const double d = table.target[r] - node_mean;
        sum_total += d;
        sq_total += d * d;
      }
      for (std::size_t p = 1; p < n; ++p) {
        const double d = table.target[order[p - 1]] - node_mean;
        sum_left += d;
        sq_left += d * d;
        const double x_prev = table.feature(order[p - 1], f);
        const double x_here = table.feature(order[p], f);
        if (x_prev == x_here) continue;
        if (p < params.min_leaf_rows || n - p < params.min_leaf_rows) continue;
        const double nl = static_cast<double>(p), nr = static_cast<double>(n - p);
        const double sum_right = sum_total - sum_left;
        const double sq_right = sq_total - sq_left;
        const double sse_l = sq_left - sum_left * sum_left / nl;
        const double sse_r = sq_right - sum_right * sum_right / nr;
        const double gain = node_sse - sse_l - sse_r;
        if (gain > best.gain && gain >= params.min_gain && gain > gain_floor) {
          best.found = true;
          best.feature = f;
          best.threshold = x_prev + (x_here - x_prev) / 2.0;
          best.gain = gain;
        }
      }
    }
    return best;
  }

  int build(std::vector<std::size_t> rows, int depth) {
    const std::size_t n = rows.size();
    double mean = 0.0;
    for (const auto r : rows) mean += table.target[r];
    mean /= static_cast<double>(n);
    double sse = 0.0;
    for (const auto r : rows) {
      const double d = table.target[r] - mean;
      sse += d * d;
    }

    const int node_index = static_cast<int>(model.nodes.size());
    model.nodes.push_back({-1, 0.0, -1, -1, mean, n, sse});

    if (depth >= params.max_depth || n < 2 * params.min_leaf_rows || sse <= 0.0)
      return node_index;
    const SplitChoice split = best_split(rows, mean, sse);
    if (!split.found) return node_index;

    std::vector<std::size_t> left, right;
    left.reserve(n);
    right.reserve(n);
    for (const auto r : rows) {
      if (table.feature(r, split.feature) < split.threshold)
        left.push_back(r);
      else
        right.push_back(r);
    }
    model.importance[split.feature] += split.gain;
    model.nodes[static_cast<std::size_t>(node_index)].feature = static_cast<int>(split.feature);
    model.nodes[static_cast<std::size_t>(node_index)].threshold = split.threshold;
    const int l = build(std::move(left), depth + 1);
    model.nodes[static_cast<std::size_t>(node_index)].left = l;
    const int r = build(std::move(right), depth + 1);
    model.nodes[static_cast<std::size_t>(node_index)].right = r;
    return node_index;
  }
};

inline std::vector<std::size_t> rows_in_window(const TrainingTable& table,
                                               const std::optional<std::pair<Date, Date>>& window) {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    if (window && (table.dates[r] < window->first || table.dates[r] > window->second)) continue;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace detail

// Greedy variance-reduction CART. An all-constant target yields a single-leaf
// tree; fewer than 2*min_leaf_rows usable rows is an error.
inline TreeModel train_tree(const TrainingTable& table, TreeHyperparams params = {},
                            std::optional<std::pair<Date, Date>> window = std::nullopt) {
  if (params.min_leaf_rows < 1) throw Error("train_tree: min_leaf_rows must be >= 1");
  if (params.max_depth < 0) throw Error("train_tree: max_depth must be >= 0");
  const auto rows = detail::rows_in_window(table, window);
  if (rows.size() < 2 * params.min_leaf_rows)
    throw Error("train_tree: too few rows (" + std::to_string(rows.size()) + ", need >= " +
                std::to_string(2 * params.min_leaf_rows) + ")");

  TreeModel model;
  model.params = params;
  model.feature_names = table.feature_names;
  model.importance.assign(table.n_features(), 0.0);
  model.schema_hash = schema_hash(model.feature_names);
  detail::TreeBuilder builder{table, params, model};
  builder.build(rows, 0);
  return model;
}

struct EvalMetrics {
  std::size_t rows = 0;
  double rmse = 0.0;
  double mae = 0.0;
  // Naive persistence: tomorrow's close predicted as the last known close.
  std::size_t baseline_rows = 0;
  double baseline_rmse = 0.0;
  double baseline_mae = 0.0;
};

inline EvalMetrics evaluate(const TreeModel& model, const TrainingTable& table,
                            std::optional<std::pair<Date, Date>> window = std::nullopt) {
  const auto rows = detail::rows_in_window(table, window);
  if (rows.empty()) throw Error("evaluate: empty evaluation window");
  EvalMetrics m;
  m.rows = rows.size();
  double sq = 0.0, abs_sum = 0.0, bsq = 0.0, babs = 0.0;
  for (const auto r : rows) {
    const double err = model.predict(table.row(r)) - table.target[r];
    sq += err * err;
    abs_sum += std::abs(err);
    if (table.prev_close[r]) {
      const double berr = *table.prev_close[r] - table.target[r];
      bsq += berr * berr;
      babs += std::abs(berr);
      ++m.baseline_rows;
    }
  }
  m.rmse = std::sqrt(sq / static_cast<double>(m.rows));
  m.mae = abs_sum / static_cast<double>(m.rows);
  if (m.baseline_rows > 0) {
    m.baseline_rmse = std::sqrt(bsq / static_cast<double>(m.baseline_rows));
    m.baseline_mae = babs / static_cast<double>(m.baseline_rows);
  }
  return m;
}

// ---- serialization ---------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json node_to_json(const TreeModel& model, int index) {
  const auto& n = model.nodes[static_cast<std::size_t>(index)];
  nlohmann::ordered_json j;
  j["rows"] = n.rows;
  j["mean"] = n.mean;
  j["sse"] = n.sse;
  if (!n.is_leaf()) {
    j["feature"] = model.feature_names[static_cast<std::size_t>(n.feature)];
    j["feature_index"] = n.feature;
    j["threshold"] = n.threshold;
    j["left"] = node_to_json(model, n.left);
    j["right"] = node_to_json(model, n.right);
  }
  return j;
}

inline int node_from_json(const nlohmann::json& j, TreeModel& model) {
  TreeNode n;
  n.rows = j.at("rows").get<std::size_t>();
  n.mean = j.at("mean").get<double>();
  n.sse = j.at("sse").get<double>();
  const int index = static_cast<int>(model.nodes.size());
  model.nodes.push_back(n);
  if (j.contains("feature_index")) {
    const int f = j.at("feature_index").get<int>();
    const double thr = j.at("threshold").get<double>();
    const int l = node_from_json(j.at("left"), model);
    const int r = node_from_json(j.at("right"), model);
    auto& node = model.nodes[static_cast<std::size_t>(index)];
    node.feature = f;
    node.threshold = thr;
    node.left = l;
    node.right = r;
  }
  return index;
}

}  // namespace detail

inline nlohmann::ordered_json tree_to_json(const TreeModel& model) {
  nlohmann::ordered_json j;
  j["feature_names"] = model.feature_names;
  char hex[24];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(model.schema_hash));
  j["schema_hash"] = hex;
  j["params"] = {{"max_depth", model.params.max_depth},
                 {"min_leaf_rows", model.params.min_leaf_rows},
                 {"min_gain", model.params.min_gain}};
  j["importance"] = model.importance;
  auto top = nlohmann::ordered_json::array();
  for (const auto& [name, gain] : model.top_features(3))
    top.push_back({{"feature", name}, {"gain", gain}});
  j["top_features"] = std::move(top);
  j["root"] = detail::node_to_json(model, 0);
  return j;
}

inline TreeModel tree_from_json(const nlohmann::json& j) {
  TreeModel model;
  model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  model.params.max_depth = j.at("params").at("max_depth").get<int>();
  model.params.min_leaf_rows = j.at("params").at("min_leaf_rows").get<std::size_t>();
  model.params.min_gain = j.at("params").at("min_gain").get<double>();
  model.importance = j.at("importance").get<std::vector<double>>();
  model.schema_hash = schema_hash(model.feature_names);
  detail::node_from_json(j.at("root"), model);
  return model;
}

inline void write_metrics_csv(std::ostream& os, const EvalMetrics& m) {
  std::vector<std::string> row = {"rows",          "rmse",          "mae",
                                  "baseline_rows", "baseline_rmse", "baseline_mae"};
  write_csv_row(os, row);
  row = {std::to_string(m.rows),          fmt_double(m.rmse),          fmt_double(m.mae),
         std::to_string(m.baseline_rows), fmt_double(m.baseline_rmse), fmt_double(m.baseline_mae)};
  write_csv_row(os, row);
}

}  // namespace gdelt
