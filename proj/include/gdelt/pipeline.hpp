#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gdelt/analytics.hpp"
#include "gdelt/event_features.hpp"
#include "gdelt/featurize.hpp"
#include "gdelt/ingest.hpp"
#include "gdelt/parser.hpp"
#include "gdelt/predict.hpp"
#include "gdelt/textmine.hpp"
#include "json.hpp"

namespace gdelt {

// Resolved configuration for one CLI run. Everything an output depends on
// lives here, so the recorded config (plus inputs) reproduces the artifacts.
struct RunConfig {
  // inputs
  std::vector<std::string> gdelt_files;
  TableSchema schema{true};
  std::string events_csv;
  std::string market_csv;
  std::string corpus_path;

  // record selection
  std::string country;                      // ActionGeo country filter, empty = keep all
  std::string country_name = "Singapore";  // bare-name centroid exclusion for geomaps

  // key-event join
  bool join_same_date_only = false;
  int window_before_days = 7;
  int window_after_days = 14;

  FeatureSpec features = default_feature_spec();
  FilterCriteria criteria;

  // analytics
  double cell_degrees = 0.1;
  bool exclude_centroid = false;
  bool zero_fill = false;
  bool group_by_quadclass = true;
  bool emit_json = false;

  // textmine
  int topics_k = 25;
  std::string link_term;
  std::size_t link_top = 9;
  bool stem = false;

  // predict
  LagPolicy lag = LagPolicy::next_trading_day;
  bool target_diff = false;
  TreeHyperparams tree;
  std::optional<std::pair<Date, Date>> window;

  std::string out_dir = "out";
  std::uint64_t seed = 42;

  static FeatureSpec default_feature_spec() {
    FeatureSpec spec;
    spec.nominal_vars = {"QuadClass", "EventRootCode", "IsRootEvent"};
    spec.numeric_vars = {{"GoldsteinScale", BinMethod::equal_width, 4},
                         {"AvgTone", BinMethod::equal_width, 4}};
    return spec;
  }
};

inline nlohmann::ordered_json config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["inputs"] = {{"gdelt", c.gdelt_files},
                 {"schema", std::string(c.schema.name())},
                 {"events", c.events_csv},
                 {"market", c.market_csv},
                 {"corpus", c.corpus_path}};
  j["country"] = c.country;
  j["country_name"] = c.country_name;
  j["join"] = {{"mode", c.join_same_date_only ? "same_date" : "window"},
               {"before_days", c.window_before_days},
               {"after_days", c.window_after_days}};
  nlohmann::ordered_json spec;
  spec["time_variable"] = c.features.time_variable;
  spec["resolution"] = resolution_name(c.features.resolution);
  spec["aggregator"] = aggregator_name(c.features.aggregator);
  spec["max_cardinality"] = c.features.max_cardinality;
  spec["nominal"] = c.features.nominal_vars;
  auto nums = nlohmann::ordered_json::array();
  for (const auto& v : c.features.numeric_vars)
    nums.push_back({{"name", v.name}, {"method", bin_method_name(v.method)}, {"bins", v.bins}});
  spec["numeric"] = std::move(nums);
  j["features"] = std::move(spec);
  nlohmann::ordered_json crit;
  crit["quad_classes"] = c.criteria.quad_classes;
  if (c.criteria.is_root_event) crit["is_root_event"] = *c.criteria.is_root_event;
  crit["hosts"] = c.criteria.hosts;
  if (c.criteria.date_from) crit["date_from"] = to_iso(*c.criteria.date_from);
  if (c.criteria.date_to) crit["date_to"] = to_iso(*c.criteria.date_to);
  if (c.criteria.event_flag) crit["event_flag"] = *c.criteria.event_flag;
  j["criteria"] = std::move(crit);
  j["analytics"] = {{"cell_degrees", c.cell_degrees},
                    {"exclude_centroid", c.exclude_centroid},
                    {"zero_fill", c.zero_fill},
                    {"group_by_quadclass", c.group_by_quadclass},
                    {"json", c.emit_json}};
  j["textmine"] = {{"k", c.topics_k}, {"term", c.link_term}, {"top", c.link_top}, {"stem", c.stem}};
  nlohmann::ordered_json pred;
  pred["lag"] = std::string(lag_policy_name(c.lag));
  pred["target_diff"] = c.target_diff;
  pred["max_depth"] = c.tree.max_depth;
  pred["min_leaf_rows"] = c.tree.min_leaf_rows;
  pred["min_gain"] = c.tree.min_gain;
  if (c.window)
    pred["window"] = to_iso(c.window->first) + ":" + to_iso(c.window->second);
  j["predict"] = std::move(pred);
  j["out_dir"] = c.out_dir;
  j["seed"] = c.seed;
  return j;
}

inline std::optional<std::pair<Date, Date>> parse_window(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const auto a = date_from_iso(s.substr(0, colon));
  const auto b = date_from_iso(s.substr(colon + 1));
  if (!a || !b || *a > *b) return std::nullopt;
  return std::make_pair(*a, *b);
}

inline RunConfig config_from_json(const nlohmann::json& raw) {
  // A previously written manifest is accepted directly; its "config" key holds
  // the resolved configuration.
  const nlohmann::json& j = raw.contains("config") && raw.contains("command") ? raw["config"] : raw;
  RunConfig c;
  if (j.contains("inputs")) {
    const auto& in = j["inputs"];
    if (in.contains("gdelt")) c.gdelt_files = in["gdelt"].get<std::vector<std::string>>();
    if (in.contains("schema")) {
      const auto s = TableSchema::from_name(in["schema"].get<std::string>());
      if (!s) throw Error("config: unknown schema '" + in["schema"].get<std::string>() + "'");
      c.schema = *s;
    }
    c.events_csv = in.value("events", "");
    c.market_csv = in.value("market", "");
    c.corpus_path = in.value("corpus", "");
  }
  c.country = j.value("country", "");
  c.country_name = j.value("country_name", "Singapore");
  if (j.contains("join")) {
    const auto& join = j["join"];
    c.join_same_date_only = join.value("mode", "window") == std::string("same_date");
    c.window_before_days = join.value("before_days", 7);
    c.window_after_days = join.value("after_days", 14);
  }
  if (j.contains("features")) {
    const auto& f = j["features"];
    c.features.time_variable = f.value("time_variable", "SQLDATE");
    if (f.contains("resolution")) {
      const auto r = resolution_from_name(f["resolution"].get<std::string>());
      if (!r) throw Error("config: unknown resolution");
      c.features.resolution = *r;
    }
    if (f.contains("aggregator")) {
      const auto a = aggregator_from_name(f["aggregator"].get<std::string>());
      if (!a) throw Error("config: unknown aggregator");
      c.features.aggregator = *a;
    }
    c.features.max_cardinality = f.value("max_cardinality", std::size_t{10000});
    if (f.contains("nominal")) c.features.nominal_vars = f["nominal"].get<std::vector<std::string>>();
    if (f.contains("numeric")) {
      c.features.numeric_vars.clear();
      for (const auto& v : f["numeric"]) {
        NumericVarSpec nv;
        nv.name = v.at("name").get<std::string>();
        if (v.contains("method")) {
          const auto m = bin_method_from_name(v["method"].get<std::string>());
          if (!m) throw Error("config: unknown bin method");
          nv.method = *m;
        }
        nv.bins = v.value("bins", 4);
        c.features.numeric_vars.push_back(std::move(nv));
      }
    }
  }
  if (j.contains("criteria")) {
    const auto& crit = j["criteria"];
    if (crit.contains("quad_classes"))
      for (const auto& q : crit["quad_classes"]) c.criteria.quad_classes.insert(q.get<int>());
    if (crit.contains("is_root_event")) c.criteria.is_root_event = crit["is_root_event"].get<bool>();
    if (crit.contains("hosts")) c.criteria.hosts = crit["hosts"].get<std::vector<std::string>>();
    if (crit.contains("date_from")) {
      const auto d = date_from_iso(crit["date_from"].get<std::string>());
      if (!d) throw Error("config: bad criteria.date_from");
      c.criteria.date_from = d;
    }
    if (crit.contains("date_to")) {
      const auto d = date_from_iso(crit["date_to"].get<std::string>());
      if (!d) throw Error("config: bad criteria.date_to");
      c.criteria.date_to = d;
    }
    if (crit.contains("event_flag")) c.criteria.event_flag = crit["event_flag"].get<int>();
  }
  if (j.contains("analytics")) {
    const auto& a = j["analytics"];
    c.cell_degrees = a.value("cell_degrees", 0.1);
    c.exclude_centroid = a.value("exclude_centroid", false);
    c.zero_fill = a.value("zero_fill", false);
    c.group_by_quadclass = a.value("group_by_quadclass", true);
    c.emit_json = a.value("json", false);
  }
  if (j.contains("textmine")) {
    const auto& t = j["textmine"];
    c.topics_k = t.value("k", 25);
    c.link_term = t.value("term", "");
    c.link_top = t.value("top", std::size_t{9});
    c.stem = t.value("stem", false);
  }
  if (j.contains("predict")) {
    const auto& p = j["predict"];
    if (p.contains("lag")) {
      const auto l = lag_policy_from_name(p["lag"].get<std::string>());
      if (!l) throw Error("config: unknown lag policy");
      c.lag = *l;
    }
    c.target_diff = p.value("target_diff", false);
    c.tree.max_depth = p.value("max_depth", 6);
    c.tree.min_leaf_rows = p.value("min_leaf_rows", std::size_t{5});
    c.tree.min_gain = p.value("min_gain", 0.0);
    if (p.contains("window")) {
      const auto w = parse_window(p["window"].get<std::string>());
      if (!w) throw Error("config: bad predict.window, expected ISO start:end");
      c.window = w;
    }
  }
  c.out_dir = j.value("out_dir", "out");
  c.seed = j.value("seed", std::uint64_t{42});
  return c;
}

inline std::uint64_t config_hash(const RunConfig& c) {
  const std::string dump = config_to_json(c).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (char ch : dump) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  return h;
}

// Primary outputs are written to a temporary sibling and renamed into place, so
// a failed run never leaves a half-written artifact behind.
inline void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

class Manifest {
 public:
  Manifest(std::string command, const RunConfig& cfg) : command_(std::move(command)), cfg_(cfg) {
    for (const auto& f : cfg.gdelt_files) add_input(f);
    for (const auto& f : {cfg.events_csv, cfg.market_csv, cfg.corpus_path})
      if (!f.empty()) add_input(f);
  }

  void add_input(const std::string& path) { inputs_.push_back(path); }
  void add_output(const std::filesystem::path& path, std::size_t rows) {
    outputs_.push_back({{"path", path.string()}, {"rows", rows}});
  }
  void count(const std::string& key, std::uint64_t n) { counts_[key] = n; }
  void timing(const std::string& key, double ms) { timings_[key] = ms; }

  void write() const {
    nlohmann::ordered_json j;
    j["command"] = command_;
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(config_hash(cfg_)));
    j["config_hash"] = hex;
    j["seed"] = cfg_.seed;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["counts"] = counts_;
    j["timings_ms"] = timings_;
    j["config"] = config_to_json(cfg_);
    write_text_atomic(std::filesystem::path(cfg_.out_dir) / "manifest.json", j.dump(2) + "\n");
  }

 private:
  std::string command_;
  const RunConfig& cfg_;
  std::vector<std::string> inputs_;
  nlohmann::ordered_json outputs_ = nlohmann::ordered_json::array();
  nlohmann::ordered_json counts_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json timings_ = nlohmann::ordered_json::object();
};

namespace detail {

class StageTimer {
 public:
  StageTimer(Manifest& manifest, std::string key)
      : manifest_(manifest), key_(std::move(key)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    const auto ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start_)
                        .count();
    manifest_.timing(key_, ms);
  }

 private:
  Manifest& manifest_;
  std::string key_;
  std::chrono::steady_clock::time_point start_;
};

struct LoadedRecords {
  std::vector<EventRecord> records;
  ParseReport report;                  // merged over all input files
  nlohmann::ordered_json per_file = nlohmann::ordered_json::array();
  std::vector<std::string> accepted_lines;
};

inline LoadedRecords load_records(const RunConfig& cfg, bool keep_lines, bool apply_country) {
  if (cfg.gdelt_files.empty()) throw Error("no input event files given (--in)");
  LoadedRecords out;
  for (const auto& path : cfg.gdelt_files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open event file: " + path);
    std::vector<EventRecord> records;
    ParseReport report = parse_stream(in, cfg.schema, [&](const EventRecord& r, const std::string& line) {
      records.push_back(r);
      if (keep_lines) out.accepted_lines.push_back(line);
    });
    nlohmann::ordered_json jf;
    jf["file"] = path;
    jf["report"] = report.to_json();
    out.per_file.push_back(std::move(jf));
    out.report.lines_read += report.lines_read;
    out.report.records_accepted += report.records_accepted;
    out.report.records_rejected += report.records_rejected;
    out.report.blank_or_comment_lines += report.blank_or_comment_lines;
    out.report.utf8_replacements += report.utf8_replacements;
    out.report.hierarchy_warnings += report.hierarchy_warnings;
    out.report.rejects.insert(out.report.rejects.end(), report.rejects.begin(),
                              report.rejects.end());
    out.records.insert(out.records.end(), records.begin(), records.end());
  }
  if (apply_country && !cfg.country.empty()) {
    out.records = filter_country(out.records, cfg.country);
    out.accepted_lines.clear();  // lines no longer align once filtered
  }
  return out;
}

inline std::vector<std::uint8_t> load_flags(const RunConfig& cfg,
                                            std::span<const EventRecord> records,
                                            Manifest& manifest) {
  if (cfg.events_csv.empty()) return {};
  const auto events = load_key_events(cfg.events_csv);
  manifest.count("key_events", events.size());
  if (cfg.join_same_date_only) return join_same_date(records, events);
  return join_window(records, events, cfg.window_before_days, cfg.window_after_days);
}

inline std::string date_range_tag(std::span<const EventRecord> records) {
  if (records.empty()) return "empty";
  Date lo = records.front().sql_date, hi = records.front().sql_date;
  for (const auto& r : records) {
    lo = std::min(lo, r.sql_date);
    hi = std::max(hi, r.sql_date);
  }
  return to_iso(lo) + "_" + to_iso(hi);
}

}  // namespace detail

inline void run_parse(const RunConfig& cfg, Manifest& manifest) {
  detail::StageTimer timer(manifest, "parse");
  auto loaded = detail::load_records(cfg, /*keep_lines=*/true, /*apply_country=*/false);
  std::string tsv;
  for (const auto& line : loaded.accepted_lines) {
    tsv += line;
    tsv += '\n';
  }
  const std::filesystem::path out_dir(cfg.out_dir);
  write_text_atomic(out_dir / "events.tsv", tsv);
  manifest.add_output(out_dir / "events.tsv", loaded.records.size());
  nlohmann::ordered_json report;
  report["totals"] = loaded.report.to_json();
  report["files"] = std::move(loaded.per_file);
  write_text_atomic(out_dir / "parse_report.json", report.dump(2) + "\n");
  manifest.add_output(out_dir / "parse_report.json", loaded.report.rejects.size());
  manifest.count("records_accepted", loaded.report.records_accepted);
  manifest.count("records_rejected", loaded.report.records_rejected);
}

inline void run_filter(const RunConfig& cfg, Manifest& manifest) {
  detail::StageTimer timer(manifest, "filter");
  if (cfg.country.empty()) throw Error("filter: --country is required");
  auto loaded = detail::load_records(cfg, /*keep_lines=*/true, /*apply_country=*/false);
  std::string tsv;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < loaded.records.size(); ++i) {
    const auto& g = loaded.records[i].action_geo.country_code;
    if (g && iequals(*g, cfg.country)) {
      tsv += loaded.accepted_lines[i];
      tsv += '\n';
      ++kept;
    }
  }
  const std::filesystem::path out_dir(cfg.out_dir);
  write_text_atomic(out_dir / "filtered.tsv", tsv);
  manifest.add_output(out_dir / "filtered.tsv", kept);
  manifest.count("records_in", loaded.records.size());
  manifest.count("records_kept", kept);
}

inline FeatureTable run_featurize(const RunConfig& cfg, Manifest& manifest) {
  detail::StageTimer timer(manifest, "featurize");
  auto loaded = detail::load_records(cfg, /*keep_lines=*/false, /*apply_country=*/true);
  EventTableSource source(loaded.records);
  FeatureTable table = derive_features(source, cfg.features);
  const std::filesystem::path out_dir(cfg.out_dir);
  std::ostringstream csv;
  table.write_csv(csv);
  write_text_atomic(out_dir / "features.csv", csv.str());
  manifest.add_output(out_dir / "features.csv", table.n_rows());
  write_text_atomic(out_dir / "features.json", table.to_json().dump(2) + "\n");
  manifest.add_output(out_dir / "features.json", table.n_rows());
  manifest.count("feature_rows", table.n_rows());
  manifest.count("feature_columns", table.n_cols());
  manifest.count("excluded_records", table.excluded_records);
  return table;
}

inline void run_analytics_views(const RunConfig& cfg, std::span<const std::string> views,
                                Manifest& manifest) {
  auto loaded = detail::load_records(cfg, /*keep_lines=*/false, /*apply_country=*/true);
  const auto records = std::span<const EventRecord>(loaded.records);
  const auto flags = detail::load_flags(cfg, records, manifest);
  const std::filesystem::path out_dir(cfg.out_dir);
  const std::string tag = detail::date_range_tag(records);

  for (const auto& view : views) {
    detail::StageTimer timer(manifest, "analytics_" + view);
    std::ostringstream csv;
    std::optional<nlohmann::ordered_json> json;
    std::size_t rows = 0;
    if (view == "monthly") {
      const auto result = monthly_goldstein(records, cfg.group_by_quadclass);
      write_monthly_csv(csv, result, cfg.group_by_quadclass, cfg.zero_fill);
      if (cfg.emit_json) json = monthly_to_json(result, cfg.group_by_quadclass);
      rows = result.size();
    } else if (view == "bubble") {
      const auto result = bubble_series(records, flags, cfg.criteria);
      write_bubble_csv(csv, result);
      if (cfg.emit_json) json = bubble_to_json(result);
      manifest.count("bubble_included_records", result.included_records);
      manifest.count("bubble_host_filter_skipped", result.host_filter_skipped);
      rows = result.rows.size();
    } else if (view == "geomap") {
      const auto result =
          geomap_bins(records, cfg.cell_degrees, cfg.exclude_centroid, cfg.country_name);
      write_geomap_csv(csv, result);
      manifest.count("geomap_no_coordinates", result.no_coordinates);
      manifest.count("geomap_centroid_excluded", result.centroid_excluded);
      rows = result.cells.size();
    } else if (view == "hierarchy") {
      const auto rollup = hierarchy_rollup(records);
      write_hierarchy_csv(csv, rollup);
      rows = rollup_leaves(rollup).size();
    } else if (view == "actors") {
      const auto edges = actor_network(records);
      write_actor_csv(csv, edges);
      rows = edges.size();
    } else {
      throw Error("unknown analytics view '" + view + "'");
    }
    const auto path = out_dir / (view + "_" + tag + ".csv");
    write_text_atomic(path, csv.str());
    manifest.add_output(path, rows);
    if (json) {
      const auto jpath = out_dir / (view + "_" + tag + ".json");
      write_text_atomic(jpath, json->dump(2) + "\n");
      manifest.add_output(jpath, rows);
    }
  }
}

inline void run_textmine(const RunConfig& cfg, const std::string& what, Manifest& manifest) {
  detail::StageTimer timer(manifest, "textmine_" + what);
  if (cfg.corpus_path.empty()) throw Error("textmine: --corpus is required");
  const Corpus corpus = load_corpus(cfg.corpus_path);
  manifest.count("corpus_docs", corpus.docs.size());
  manifest.count("corpus_skipped_empty", corpus.skipped_empty);
  const DocTermMatrix matrix = build_matrix(corpus.docs, default_stoplist(), cfg.stem);
  manifest.count("vocabulary", matrix.n_terms());
  const std::filesystem::path out_dir(cfg.out_dir);

  if (what == "links") {
    if (cfg.link_term.empty()) throw Error("textmine links: --term is required");
    const auto links = concept_links(matrix, to_lower(cfg.link_term), cfg.link_top);
    std::ostringstream csv;
    write_links_csv(csv, links);
    const auto path = out_dir / ("links_" + to_lower(cfg.link_term) + ".csv");
    write_text_atomic(path, csv.str());
    manifest.add_output(path, links.size());
  } else if (what == "topics") {
    const TopicRun run = extract_topics(matrix, cfg.topics_k, cfg.seed);
    std::ostringstream csv;
    write_topics_csv(csv, run);
    const auto path = out_dir / ("topics_k" + std::to_string(cfg.topics_k) + ".csv");
    write_text_atomic(path, csv.str());
    manifest.add_output(path, run.topics.size());
    const auto jpath = out_dir / ("topics_k" + std::to_string(cfg.topics_k) + ".json");
    write_text_atomic(jpath, topics_to_json(run, matrix).dump(2) + "\n");
    manifest.add_output(jpath, run.topics.size());
  } else {
    throw Error("unknown textmine subcommand '" + what + "'");
  }
}

inline TrainingTable build_training_from_cfg(const RunConfig& cfg, const FeatureTable& features,
                                             Manifest& manifest) {
  if (cfg.market_csv.empty()) throw Error("predict: --market is required");
  const MarketSeries market = load_market(cfg.market_csv);
  manifest.count("market_bars", market.bars.size());
  manifest.count("market_warnings", market.warnings.size());
  TrainingTable table = build_training_table(features, market, cfg.lag, cfg.target_diff);
  manifest.count("training_rows", table.n_rows());
  manifest.count("training_dropped", table.dropped_rows);
  return table;
}

inline void write_training(const RunConfig& cfg, const TrainingTable& table, Manifest& manifest) {
  std::ostringstream csv;
  table.write_csv(csv);
  const auto path = std::filesystem::path(cfg.out_dir) / "training.csv";
  write_text_atomic(path, csv.str());
  manifest.add_output(path, table.n_rows());
}

inline void write_tree(const RunConfig& cfg, const TreeModel& model, Manifest& manifest) {
  const auto path = std::filesystem::path(cfg.out_dir) / "tree.json";
  write_text_atomic(path, tree_to_json(model).dump(2) + "\n");
  manifest.add_output(path, model.nodes.size());
}

inline void run_predict(const RunConfig& cfg, const std::string& what, Manifest& manifest) {
  detail::StageTimer timer(manifest, "predict_" + what);
  const std::filesystem::path out_dir(cfg.out_dir);
  auto read_training = [&]() -> TrainingTable {
    const auto path = out_dir / "training.csv";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("predict " + what + ": cannot open " + path.string() +
                         " (run `predict build` first)");
    return read_training_csv(in);
  };

  if (what == "build") {
    if (cfg.gdelt_files.empty()) throw Error("predict build: --in event files are required");
    const FeatureTable features = run_featurize(cfg, manifest);
    const TrainingTable table = build_training_from_cfg(cfg, features, manifest);
    write_training(cfg, table, manifest);
  } else if (what == "train") {
    const TrainingTable table = read_training();
    const TreeModel model = train_tree(table, cfg.tree, cfg.window);
    write_tree(cfg, model, manifest);
    manifest.count("tree_nodes", model.nodes.size());
  } else if (what == "eval") {
    const TrainingTable table = read_training();
    const auto model_path = out_dir / "tree.json";
    std::ifstream in(model_path, std::ios::binary);
    if (!in) throw Error("predict eval: cannot open " + model_path.string());
    nlohmann::json j;
    in >> j;
    const TreeModel model = tree_from_json(j);
    const EvalMetrics metrics = evaluate(model, table, cfg.window);
    std::ostringstream csv;
    write_metrics_csv(csv, metrics);
    const auto path = out_dir / "metrics.csv";
    write_text_atomic(path, csv.str());
    manifest.add_output(path, 1);
  } else {
    throw Error("unknown predict subcommand '" + what + "'");
  }
}

// parse -> country filter -> featurize -> analytics views -> lagged training
// table -> tree, all from one config.
inline void run_pipeline(const RunConfig& cfg, Manifest& manifest) {
  detail::StageTimer timer(manifest, "pipeline");
  const FeatureTable features = run_featurize(cfg, manifest);
  static const std::vector<std::string> kViews = {"monthly", "bubble", "geomap", "hierarchy",
                                                  "actors"};
  run_analytics_views(cfg, kViews, manifest);
  if (!cfg.market_csv.empty()) {
    const TrainingTable table = build_training_from_cfg(cfg, features, manifest);
    write_training(cfg, table, manifest);
    const TreeModel model = train_tree(table, cfg.tree, cfg.window);
    write_tree(cfg, model, manifest);
    manifest.count("tree_nodes", model.nodes.size());
  }
}

}  // namespace gdelt
