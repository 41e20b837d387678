#pragma once

#include <algorithm>
#include <charconv>
#include <concepts>
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
#include "gdelt/error.hpp"
#include "json.hpp"

namespace gdelt {

enum class BinMethod { equal_width, equal_frequency };
enum class Aggregator { count, sum, avg };
enum class Resolution { day, month };

inline std::string_view bin_method_name(BinMethod m) {
  return m == BinMethod::equal_width ? "equal_width" : "equal_frequency";
}
inline std::optional<BinMethod> bin_method_from_name(std::string_view s) {
  if (s == "equal_width" || s == "width") return BinMethod::equal_width;
  if (s == "equal_frequency" || s == "freq") return BinMethod::equal_frequency;
  return std::nullopt;
}
inline std::string_view aggregator_name(Aggregator a) {
  switch (a) {
    case Aggregator::count: return "count";
    case Aggregator::sum: return "sum";
    case Aggregator::avg: return "avg";
  }
  return "?";
}
inline std::optional<Aggregator> aggregator_from_name(std::string_view s) {
  if (s == "count") return Aggregator::count;
  if (s == "sum") return Aggregator::sum;
  if (s == "avg") return Aggregator::avg;
  return std::nullopt;
}
inline std::string_view resolution_name(Resolution r) {
  return r == Resolution::day ? "day" : "month";
}
inline std::optional<Resolution> resolution_from_name(std::string_view s) {
  if (s == "day") return Resolution::day;
  if (s == "month") return Resolution::month;
  return std::nullopt;
}

struct NumericVarSpec {
  std::string name;
  BinMethod method = BinMethod::equal_width;
  int bins = 4;
};

struct FeatureSpec {
  std::string time_variable = "SQLDATE";
  Resolution resolution = Resolution::day;
  std::vector<std::string> nominal_vars;
  std::vector<NumericVarSpec> numeric_vars;
  Aggregator aggregator = Aggregator::count;
  std::size_t max_cardinality = 10000;

  void validate() const {
    std::set<std::string_view> names;
    for (const auto& v : nominal_vars) {
      if (!names.insert(v).second) throw Error("feature spec: duplicate variable '" + v + "'");
    }
    for (const auto& v : numeric_vars) {
      if (!names.insert(v.name).second)
        throw Error("feature spec: duplicate variable '" + v.name + "'");
      if (v.bins < 1) throw Error("feature spec: bin count must be >= 1 for '" + v.name + "'");
    }
    if (max_cardinality < 1) throw Error("feature spec: max_cardinality must be >= 1");
    if (nominal_vars.empty() && numeric_vars.empty())
      throw Error("feature spec: no variables declared");
  }
};

// Fitted bin edges for one numeric variable. `boundaries` holds the upper edge
// of each bin, strictly ascending and strictly above `lower_bound`; bin k is
// [b_{k-1}, b_k) with the last bin closed on the right. Duplicate edges from
// skewed data are collapsed, so effective_bins() may be below requested_bins.
struct BinSet {
  std::string variable;
  BinMethod method = BinMethod::equal_width;
  double lower_bound = 0.0;
  std::vector<double> boundaries;
  std::size_t fitted_on = 0;
  int requested_bins = 0;

  int effective_bins() const { return static_cast<int>(boundaries.size()); }
};

// Maps a value to its 1-based bin, 0 for missing. Values outside the fitted
// range clamp to the first/last bin so train-time bins apply to unseen data.
inline std::size_t apply_bins(std::optional<double> value, const BinSet& bins) {
  if (!value || bins.boundaries.empty()) return 0;
  const auto it = std::upper_bound(bins.boundaries.begin(), bins.boundaries.end(), *value);
  const std::size_t idx = static_cast<std::size_t>(it - bins.boundaries.begin()) + 1;
  return std::min(idx, bins.boundaries.size());
}

template <class S>
concept FeatureSource = requires(const S& s, std::size_t i, std::string_view var) {
  { s.row_count() } -> std::convertible_to<std::size_t>;
  { s.time_value(i) } -> std::convertible_to<std::optional<Date>>;
  { s.has_nominal(var) } -> std::convertible_to<bool>;
  { s.has_numeric(var) } -> std::convertible_to<bool>;
  { s.nominal_value(var, i) } -> std::convertible_to<std::optional<std::string>>;
  { s.numeric_value(var, i) } -> std::convertible_to<std::optional<double>>;
};

namespace detail {

inline Date truncate_to(Resolution res, Date d) {
  return res == Resolution::day ? d : YearMonth::of(d).first_day();
}

inline BinSet fit_bins_on_values(std::vector<double> values, std::string_view var,
                                 BinMethod method, int requested) {
  if (requested < 1) throw Error("fit_bins: bin count must be >= 1 for '" + std::string(var) + "'");
  if (values.empty())
    throw Error("fit_bins: no non-missing values for '" + std::string(var) + "'");
  std::sort(values.begin(), values.end());
  const double lo = values.front();
  const double hi = values.back();
  const std::size_t n = values.size();

  BinSet out;
  out.variable = std::string(var);
  out.method = method;
  out.lower_bound = lo;
  out.fitted_on = n;
  out.requested_bins = requested;

  std::vector<double> raw;
  raw.reserve(static_cast<std::size_t>(requested));
  if (method == BinMethod::equal_width) {
    for (int i = 1; i < requested; ++i)
      raw.push_back(lo + (hi - lo) * static_cast<double>(i) / requested);
    raw.push_back(hi);
  } else {
    // Upper edge of bin i sits at the i/l rank quantile.
    for (int i = 1; i < requested; ++i)
      raw.push_back(values[n * static_cast<std::size_t>(i) / static_cast<std::size_t>(requested)]);
    raw.push_back(hi);
  }

  for (double b : raw) {
    if (b > out.lower_bound && (out.boundaries.empty() || b > out.boundaries.back()))
      out.boundaries.push_back(b);
  }
  if (out.boundaries.empty()) out.boundaries.push_back(hi);  // constant data: one bin
  return out;
}

}  // namespace detail

// Ordered distinct non-missing values of a nominal variable. Missing never
// appears here; it owns the index-0 derived column.
template <FeatureSource S>
std::vector<std::string> distinct_values(const S& source, std::string_view var,
                                         std::size_t max_cardinality = 10000) {
  if (!source.has_nominal(var))
    throw Error("distinct_values: unknown nominal variable '" + std::string(var) + "'");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < source.row_count(); ++i) {
    if (auto v = source.nominal_value(var, i)) {
      seen.insert(std::move(*v));
      if (seen.size() > max_cardinality)
        throw Error("distinct_values: variable '" + std::string(var) + "' exceeds max_cardinality " +
                    std::to_string(max_cardinality));
    }
  }
  return {seen.begin(), seen.end()};
}

template <FeatureSource S>
BinSet fit_bins(const S& source, std::string_view var, BinMethod method, int bins) {
  if (!source.has_numeric(var))
    throw Error("fit_bins: unknown numeric variable '" + std::string(var) + "'");
  std::vector<double> values;
  values.reserve(source.row_count());
  for (std::size_t i = 0; i < source.row_count(); ++i)
    if (auto v = source.numeric_value(var, i)) values.push_back(*v);
  return detail::fit_bins_on_values(std::move(values), var, method, bins);
}

enum class ColumnKind { missing, nominal_value, numeric_bin };

struct ColumnMeta {
  std::string name;      // "{var}__MISSING", "{var}__{value}" or "{var}__bin{k}"
  std::string variable;
  ColumnKind kind = ColumnKind::missing;
  std::string value;     // nominal value, when kind == nominal_value
  int bin_index = 0;     // 1-based, when kind == numeric_bin

  // The spelling used in prose, e.g. "ActionGeo_Fullname = Toa Payoh".
  std::string display() const {
    switch (kind) {
      case ColumnKind::missing: return variable + " = NULL";
      case ColumnKind::nominal_value: return variable + " = " + value;
      case ColumnKind::numeric_bin: return variable + " in bin " + std::to_string(bin_index);
    }
    return name;
  }
};

// Output of the rollup: one row per distinct temporal unit, ascending, with
// one derived column per (variable, value-or-bin) plus a missing column per
// variable at index 0 of its block.
struct FeatureTable {
  Resolution resolution = Resolution::day;
  std::vector<Date> rows;
  std::vector<ColumnMeta> columns;
  std::vector<double> cells;            // rows x columns, row-major
  std::vector<std::uint8_t> present;    // parallel mask, populated for avg only
  FeatureSpec spec;
  std::vector<BinSet> bins;
  std::size_t excluded_records = 0;     // records without a usable temporal unit

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return columns.size(); }
  double cell(std::size_t r, std::size_t c) const { return cells[r * columns.size() + c]; }
  bool cell_present(std::size_t r, std::size_t c) const {
    return present.empty() || present[r * columns.size() + c] != 0;
  }

  std::string time_label(std::size_t r) const {
    return resolution == Resolution::day ? to_iso(rows[r]) : YearMonth::of(rows[r]).str();
  }

  void write_csv(std::ostream& os) const {
    std::vector<std::string> row;
    row.reserve(columns.size() + 1);
    row.emplace_back(resolution == Resolution::day ? "date" : "month");
    for (const auto& c : columns) row.push_back(c.name);
    const bool masked = !present.empty();
    if (masked)
      for (const auto& c : columns) row.push_back(c.name + "__present");
    write_csv_row(os, row);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      row.clear();
      row.push_back(time_label(r));
      for (std::size_t c = 0; c < columns.size(); ++c) row.push_back(fmt_double(cell(r, c)));
      if (masked)
        for (std::size_t c = 0; c < columns.size(); ++c)
          row.push_back(cell_present(r, c) ? "1" : "0");
      write_csv_row(os, row);
    }
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["resolution"] = resolution_name(resolution);
    j["aggregator"] = aggregator_name(spec.aggregator);
    j["time_variable"] = spec.time_variable;
    j["excluded_records"] = excluded_records;
    auto cols = nlohmann::ordered_json::array();
    for (const auto& c : columns) {
      nlohmann::ordered_json jc;
      jc["name"] = c.name;
      jc["variable"] = c.variable;
      jc["kind"] = c.kind == ColumnKind::missing        ? "missing"
                   : c.kind == ColumnKind::nominal_value ? "value"
                                                          : "bin";
      if (c.kind == ColumnKind::nominal_value) jc["value"] = c.value;
      if (c.kind == ColumnKind::numeric_bin) jc["bin"] = c.bin_index;
      jc["display"] = c.display();
      cols.push_back(std::move(jc));
    }
    j["columns"] = std::move(cols);
    auto jbins = nlohmann::ordered_json::array();
    for (const auto& b : bins) {
      nlohmann::ordered_json jb;
      jb["variable"] = b.variable;
      jb["method"] = bin_method_name(b.method);
      jb["lower_bound"] = b.lower_bound;
      jb["boundaries"] = b.boundaries;
      jb["fitted_on"] = b.fitted_on;
      jb["requested_bins"] = b.requested_bins;
      jb["effective_bins"] = b.effective_bins();
      jbins.push_back(std::move(jb));
    }
    j["bins"] = std::move(jbins);
    auto jrows = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < rows.size(); ++r) jrows.push_back(time_label(r));
    j["rows"] = std::move(jrows);
    auto jcells = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < rows.size(); ++r) {
      auto jr = nlohmann::ordered_json::array();
      for (std::size_t c = 0; c < columns.size(); ++c) jr.push_back(cell(r, c));
      jcells.push_back(std::move(jr));
    }
    j["cells"] = std::move(jcells);
    if (!present.empty()) {
      auto jmask = nlohmann::ordered_json::array();
      for (std::size_t r = 0; r < rows.size(); ++r) {
        auto jr = nlohmann::ordered_json::array();
        for (std::size_t c = 0; c < columns.size(); ++c)
          jr.push_back(cell_present(r, c) ? 1 : 0);
        jmask.push_back(std::move(jr));
      }
      j["present"] = std::move(jmask);
    }
    return j;
  }
};

// Rolls records up to one row per temporal unit. Two passes: the first
// discovers distinct nominal values and fits bins (unless pre-fitted BinSets
// are injected), the second aggregates. Only records with a usable temporal
// unit participate in either pass; the rest are counted in excluded_records.
//
// Aggregation semantics: nominal value columns and every __MISSING column are
// always record counts. Numeric bin columns hold counts (count), the sum of
// the variable's values in the bin (sum), or sum/count with a presence mask
// distinguishing empty cells from true zero averages (avg).
template <FeatureSource S>
FeatureTable derive_features(const S& source, const FeatureSpec& spec,
                             const std::vector<BinSet>* prefitted = nullptr) {
  spec.validate();
  for (const auto& v : spec.nominal_vars)
    if (!source.has_nominal(v)) throw Error("derive_features: unknown nominal variable '" + v + "'");
  for (const auto& v : spec.numeric_vars)
    if (!source.has_numeric(v.name))
      throw Error("derive_features: unknown numeric variable '" + v.name + "'");

  FeatureTable table;
  table.resolution = spec.resolution;
  table.spec = spec;

  // Pass 1: temporal units, distinct nominal values, numeric values for fitting.
  std::map<Date, std::size_t> row_of;
  std::vector<std::optional<Date>> unit_of(source.row_count());
  std::vector<std::set<std::string>> nominal_values(spec.nominal_vars.size());
  std::vector<std::vector<double>> numeric_pool(spec.numeric_vars.size());
  for (std::size_t i = 0; i < source.row_count(); ++i) {
    const auto t = source.time_value(i);
    if (!t) {
      ++table.excluded_records;
      continue;
    }
    const Date unit = detail::truncate_to(spec.resolution, *t);
    unit_of[i] = unit;
    row_of.emplace(unit, 0);
    for (std::size_t v = 0; v < spec.nominal_vars.size(); ++v) {
      if (auto val = source.nominal_value(spec.nominal_vars[v], i)) {
        nominal_values[v].insert(std::move(*val));
        if (nominal_values[v].size() > spec.max_cardinality)
          throw Error("derive_features: variable '" + spec.nominal_vars[v] +
                      "' exceeds max_cardinality " + std::to_string(spec.max_cardinality));
      }
    }
    if (!prefitted) {
      for (std::size_t v = 0; v < spec.numeric_vars.size(); ++v)
        if (auto val = source.numeric_value(spec.numeric_vars[v].name, i))
          numeric_pool[v].push_back(*val);
    }
  }
  std::size_t next_row = 0;
  for (auto& [unit, idx] : row_of) {
    idx = next_row++;
    table.rows.push_back(unit);
  }

  // Bin sets: injected or fitted on this data.
  for (std::size_t v = 0; v < spec.numeric_vars.size(); ++v) {
    const auto& nv = spec.numeric_vars[v];
    if (prefitted) {
      const auto it = std::find_if(prefitted->begin(), prefitted->end(),
                                   [&](const BinSet& b) { return b.variable == nv.name; });
      if (it == prefitted->end())
        throw Error("derive_features: no pre-fitted bins for variable '" + nv.name + "'");
      table.bins.push_back(*it);
    } else if (numeric_pool[v].empty()) {
      // No observable values: the variable contributes only its missing column.
      BinSet empty;
      empty.variable = nv.name;
      empty.method = nv.method;
      empty.requested_bins = nv.bins;
      table.bins.push_back(std::move(empty));
    } else {
      table.bins.push_back(
          detail::fit_bins_on_values(std::move(numeric_pool[v]), nv.name, nv.method, nv.bins));
    }
  }

  // Column blocks: nominals in spec order, then numerics in spec order;
  // __MISSING first in each block, nominal values lexicographic, bins 1..l.
  struct Block {
    std::size_t first_col = 0;
    std::map<std::string, std::size_t> value_col;  // nominal value -> column
  };
  std::vector<Block> nominal_blocks(spec.nominal_vars.size());
  std::vector<std::size_t> numeric_first(spec.numeric_vars.size());
  for (std::size_t v = 0; v < spec.nominal_vars.size(); ++v) {
    const auto& var = spec.nominal_vars[v];
    nominal_blocks[v].first_col = table.columns.size();
    table.columns.push_back({var + "__MISSING", var, ColumnKind::missing, "", 0});
    for (const auto& val : nominal_values[v]) {
      nominal_blocks[v].value_col[val] = table.columns.size();
      table.columns.push_back({var + "__" + val, var, ColumnKind::nominal_value, val, 0});
    }
  }
  for (std::size_t v = 0; v < spec.numeric_vars.size(); ++v) {
    const auto& var = spec.numeric_vars[v].name;
    numeric_first[v] = table.columns.size();
    table.columns.push_back({var + "__MISSING", var, ColumnKind::missing, "", 0});
    for (int k = 1; k <= table.bins[v].effective_bins(); ++k)
      table.columns.push_back(
          {var + "__bin" + std::to_string(k), var, ColumnKind::numeric_bin, "", k});
  }

  // Pass 2: aggregate.
  const std::size_t n_cols = table.columns.size();
  const std::size_t n_rows = table.rows.size();
  std::vector<double> counts(n_rows * n_cols, 0.0);
  const bool needs_sums = spec.aggregator != Aggregator::count && !spec.numeric_vars.empty();
  std::vector<double> sums;
  if (needs_sums) sums.assign(n_rows * n_cols, 0.0);

  for (std::size_t i = 0; i < source.row_count(); ++i) {
    if (!unit_of[i]) continue;
    const std::size_t r = row_of[*unit_of[i]];
    for (std::size_t v = 0; v < spec.nominal_vars.size(); ++v) {
      const auto val = source.nominal_value(spec.nominal_vars[v], i);
      std::size_t c = nominal_blocks[v].first_col;
      if (val) c = nominal_blocks[v].value_col.at(*val);
      counts[r * n_cols + c] += 1.0;
    }
    for (std::size_t v = 0; v < spec.numeric_vars.size(); ++v) {
      const auto val = source.numeric_value(spec.numeric_vars[v].name, i);
      const std::size_t k = apply_bins(val, table.bins[v]);
      const std::size_t c = numeric_first[v] + k;
      counts[r * n_cols + c] += 1.0;
      if (needs_sums && k > 0) sums[r * n_cols + c] += *val;
    }
  }

  table.cells = counts;
  if (spec.aggregator == Aggregator::sum) {
    for (std::size_t v = 0; v < spec.numeric_vars.size(); ++v) {
      for (int k = 1; k <= table.bins[v].effective_bins(); ++k) {
        const std::size_t c = numeric_first[v] + static_cast<std::size_t>(k);
        for (std::size_t r = 0; r < n_rows; ++r) table.cells[r * n_cols + c] = sums[r * n_cols + c];
      }
    }
  } else if (spec.aggregator == Aggregator::avg) {
    table.present.assign(n_rows * n_cols, 1);
    for (std::size_t v = 0; v < spec.numeric_vars.size(); ++v) {
      for (int k = 1; k <= table.bins[v].effective_bins(); ++k) {
        const std::size_t c = numeric_first[v] + static_cast<std::size_t>(k);
        for (std::size_t r = 0; r < n_rows; ++r) {
          const double cnt = counts[r * n_cols + c];
          table.cells[r * n_cols + c] = cnt > 0 ? sums[r * n_cols + c] / cnt : 0.0;
          table.present[r * n_cols + c] = cnt > 0 ? 1 : 0;
        }
      }
    }
  }
  return table;
}

}  // namespace gdelt
