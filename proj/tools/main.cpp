// Command-line front end for the event analytics pipeline. Subcommands cover
// parsing, country filtering, feature rollup, the analytics views, text
// mining, index prediction, and an end-to-end `pipeline` run.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gdelt/pipeline.hpp"

namespace {

struct Overrides {
  std::vector<std::string> in_files;
  std::string out, config_path, country, country_name, schema;
  std::string events, market, corpus;
  std::optional<int> bins;
  std::string bin_method, agg, resolution, lag, window, hosts;
  std::vector<int> quadclass;
  bool root_only = false;
  bool same_date = false;
  std::optional<int> before_days, after_days;
  std::optional<std::uint64_t> seed;
  std::optional<double> cell;
  bool exclude_centroid = false, zero_fill = false, emit_json = false;
  bool no_quad_grouping = false;
  std::string term;
  std::optional<int> k;
  std::optional<std::size_t> top;
  bool stem = false;
  std::optional<int> max_depth;
  std::optional<std::size_t> min_leaf_rows;
  std::optional<double> min_gain;
  bool target_diff = false;
};

gdelt::RunConfig resolve_config(const Overrides& o) {
  gdelt::RunConfig cfg;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path, std::ios::binary);
    if (!in) throw gdelt::Error("cannot open config: " + o.config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw gdelt::Error("bad config JSON: " + std::string(e.what()));
    }
    cfg = gdelt::config_from_json(j);
  }
  if (!o.in_files.empty()) cfg.gdelt_files = o.in_files;
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (!o.country.empty()) cfg.country = o.country;
  if (!o.country_name.empty()) cfg.country_name = o.country_name;
  if (!o.schema.empty()) {
    const auto s = gdelt::TableSchema::from_name(o.schema);
    if (!s) throw gdelt::Error("unknown schema '" + o.schema + "' (use 56col or 57col)");
    cfg.schema = *s;
  }
  if (!o.events.empty()) cfg.events_csv = o.events;
  if (!o.market.empty()) cfg.market_csv = o.market;
  if (!o.corpus.empty()) cfg.corpus_path = o.corpus;
  if (o.bins) {
    for (auto& v : cfg.features.numeric_vars) v.bins = *o.bins;
  }
  if (!o.bin_method.empty()) {
    const auto m = gdelt::bin_method_from_name(o.bin_method);
    if (!m) throw gdelt::Error("unknown bin method '" + o.bin_method + "' (use width or freq)");
    for (auto& v : cfg.features.numeric_vars) v.method = *m;
  }
  if (!o.agg.empty()) {
    const auto a = gdelt::aggregator_from_name(o.agg);
    if (!a) throw gdelt::Error("unknown aggregator '" + o.agg + "'");
    cfg.features.aggregator = *a;
  }
  if (!o.resolution.empty()) {
    const auto r = gdelt::resolution_from_name(o.resolution);
    if (!r) throw gdelt::Error("unknown resolution '" + o.resolution + "'");
    cfg.features.resolution = *r;
  }
  if (!o.lag.empty()) {
    const auto l = gdelt::lag_policy_from_name(o.lag);
    if (!l) throw gdelt::Error("unknown lag policy '" + o.lag + "' (use calendar or trading)");
    cfg.lag = *l;
  }
  if (!o.window.empty()) {
    const auto w = gdelt::parse_window(o.window);
    if (!w) throw gdelt::Error("bad --window, expected ISO start:end");
    cfg.window = w;
    cfg.criteria.date_from = w->first;
    cfg.criteria.date_to = w->second;
  }
  for (int q : o.quadclass) {
    if (q < 1 || q > 4) throw gdelt::Error("--quadclass must be 1..4");
    cfg.criteria.quad_classes.insert(q);
  }
  if (o.root_only) cfg.criteria.is_root_event = true;
  if (!o.hosts.empty()) {
    cfg.criteria.hosts.clear();
    std::vector<std::string_view> parts;
    gdelt::split_char(o.hosts, ',', parts);
    for (auto p : parts) {
      const auto host = gdelt::trim(p);
      if (!host.empty()) cfg.criteria.hosts.emplace_back(host);
    }
  }
  if (o.same_date) cfg.join_same_date_only = true;
  if (o.before_days) cfg.window_before_days = *o.before_days;
  if (o.after_days) cfg.window_after_days = *o.after_days;
  if (o.seed) cfg.seed = *o.seed;
  if (o.cell) cfg.cell_degrees = *o.cell;
  if (o.exclude_centroid) cfg.exclude_centroid = true;
  if (o.zero_fill) cfg.zero_fill = true;
  if (o.emit_json) cfg.emit_json = true;
  if (o.no_quad_grouping) cfg.group_by_quadclass = false;
  if (!o.term.empty()) cfg.link_term = o.term;
  if (o.k) cfg.topics_k = *o.k;
  if (o.top) cfg.link_top = *o.top;
  if (o.stem) cfg.stem = true;
  if (o.max_depth) cfg.tree.max_depth = *o.max_depth;
  if (o.min_leaf_rows) cfg.tree.min_leaf_rows = *o.min_leaf_rows;
  if (o.min_gain) cfg.tree.min_gain = *o.min_gain;
  if (o.target_diff) cfg.target_diff = true;
  return cfg;
}

void add_common_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--in", o.in_files, "Input event table file(s), tab-delimited");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--config", o.config_path, "JSON config (a manifest.json also works)");
  cmd->add_option("--schema", o.schema, "Column layout: 56col or 57col");
  cmd->add_option("--country", o.country, "ActionGeo country code filter");
  cmd->add_option("--seed", o.seed, "Seed recorded in outputs and used by seeded stages");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GDELT event pipeline: parse, featurize, analyze, mine, predict"};
  app.require_subcommand(1);
  Overrides o;

  auto* parse_cmd = app.add_subcommand("parse", "Parse event files into a clean table + report");
  add_common_flags(parse_cmd, o);

  auto* filter_cmd = app.add_subcommand("filter", "Keep records for one ActionGeo country");
  add_common_flags(filter_cmd, o);

  auto* feat_cmd = app.add_subcommand("featurize", "Roll records up to per-unit feature rows");
  add_common_flags(feat_cmd, o);
  feat_cmd->add_option("--bins", o.bins, "Bin count for every numeric variable");
  feat_cmd->add_option("--bin-method", o.bin_method, "width or freq");
  feat_cmd->add_option("--agg", o.agg, "count, sum or avg");
  feat_cmd->add_option("--resolution", o.resolution, "day or month");

  auto* analytics_cmd = app.add_subcommand("analytics", "Plot-ready aggregation views");
  analytics_cmd->require_subcommand(1);
  std::vector<std::string> views;
  for (const char* view : {"monthly", "bubble", "geomap", "hierarchy", "actors", "all"}) {
    auto* sub = analytics_cmd->add_subcommand(view, std::string(view) + " view");
    add_common_flags(sub, o);
    sub->add_option("--events", o.events, "Key-event CSV (date,label,source)");
    sub->add_option("--window", o.window, "Date range start:end (ISO)");
    sub->add_option("--quadclass", o.quadclass, "QuadClass filter, 1..4");
    sub->add_flag("--root-only", o.root_only, "Keep IsRootEvent = true only");
    sub->add_option("--hosts", o.hosts, "Comma-separated source host whitelist");
    sub->add_flag("--same-date", o.same_date, "Flag records sharing a key-event date only");
    sub->add_option("--before", o.before_days, "Join window: days before a key event");
    sub->add_option("--after", o.after_days, "Join window: days after a key event");
    sub->add_option("--cell", o.cell, "Geomap cell size in degrees");
    sub->add_flag("--exclude-centroid", o.exclude_centroid,
                  "Drop rows located at the bare country name");
    sub->add_option("--country-name", o.country_name, "Country name for centroid exclusion");
    sub->add_flag("--zero-fill", o.zero_fill, "Dense month axis for line charts");
    sub->add_flag("--no-quad-grouping", o.no_quad_grouping, "Monthly view without QuadClass");
    sub->add_flag("--json", o.emit_json, "Also write the JSON variant");
    sub->callback([&views, view] { views.push_back(view); });
  }

  auto* text_cmd = app.add_subcommand("textmine", "Concept links and topic analysis");
  text_cmd->require_subcommand(1);
  std::string text_what;
  for (const char* what : {"links", "topics"}) {
    auto* sub = text_cmd->add_subcommand(what);
    add_common_flags(sub, o);
    sub->add_option("--corpus", o.corpus, "Corpus manifest CSV or JSON-lines file");
    sub->add_option("--term", o.term, "Term to expand (links)");
    sub->add_option("--top", o.top, "Neighbors to keep (links)");
    sub->add_option("--k", o.k, "Number of topics (topics)");
    sub->add_flag("--stem", o.stem, "Light suffix stripping");
    sub->callback([&text_what, what] { text_what = what; });
  }

  auto* predict_cmd = app.add_subcommand("predict", "Lagged training table, tree, evaluation");
  predict_cmd->require_subcommand(1);
  std::string predict_what;
  for (const char* what : {"build", "train", "eval"}) {
    auto* sub = predict_cmd->add_subcommand(what);
    add_common_flags(sub, o);
    sub->add_option("--market", o.market, "Market index CSV (Yahoo-Finance headers)");
    sub->add_option("--lag", o.lag, "calendar or trading");
    sub->add_option("--window", o.window, "Train/eval date range start:end");
    sub->add_option("--bins", o.bins, "Bin count for every numeric variable");
    sub->add_option("--bin-method", o.bin_method, "width or freq");
    sub->add_option("--agg", o.agg, "count, sum or avg");
    sub->add_option("--max-depth", o.max_depth, "Tree depth limit");
    sub->add_option("--min-leaf-rows", o.min_leaf_rows, "Minimum rows per leaf");
    sub->add_option("--min-gain", o.min_gain, "Minimum SSE reduction per split");
    sub->add_flag("--target-diff", o.target_diff, "Predict next-day change instead of level");
    sub->callback([&predict_what, what] { predict_what = what; });
  }

  auto* pipeline_cmd = app.add_subcommand("pipeline", "parse -> filter -> featurize -> views -> tree");
  add_common_flags(pipeline_cmd, o);
  pipeline_cmd->add_option("--events", o.events, "Key-event CSV");
  pipeline_cmd->add_option("--market", o.market, "Market index CSV");
  pipeline_cmd->add_option("--window", o.window, "Date range start:end");
  pipeline_cmd->add_option("--bins", o.bins, "Bin count for every numeric variable");
  pipeline_cmd->add_option("--bin-method", o.bin_method, "width or freq");
  pipeline_cmd->add_option("--agg", o.agg, "count, sum or avg");
  pipeline_cmd->add_option("--resolution", o.resolution, "day or month");
  pipeline_cmd->add_option("--lag", o.lag, "calendar or trading");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const gdelt::RunConfig cfg = resolve_config(o);
    std::string command;
    if (parse_cmd->parsed()) command = "parse";
    else if (filter_cmd->parsed()) command = "filter";
    else if (feat_cmd->parsed()) command = "featurize";
    else if (analytics_cmd->parsed()) command = "analytics " + views.front();
    else if (text_cmd->parsed()) command = "textmine " + text_what;
    else if (predict_cmd->parsed()) command = "predict " + predict_what;
    else command = "pipeline";

    gdelt::Manifest manifest(command, cfg);
    if (parse_cmd->parsed()) {
      gdelt::run_parse(cfg, manifest);
    } else if (filter_cmd->parsed()) {
      gdelt::run_filter(cfg, manifest);
    } else if (feat_cmd->parsed()) {
      gdelt::run_featurize(cfg, manifest);
    } else if (analytics_cmd->parsed()) {
      static const std::vector<std::string> kAll = {"monthly", "bubble", "geomap", "hierarchy",
                                                    "actors"};
      const auto& selected = views.front() == "all" ? kAll : views;
      gdelt::run_analytics_views(cfg, selected, manifest);
    } else if (text_cmd->parsed()) {
      gdelt::run_textmine(cfg, text_what, manifest);
    } else if (predict_cmd->parsed()) {
      gdelt::run_predict(cfg, predict_what, manifest);
    } else {
      gdelt::run_pipeline(cfg, manifest);
    }
    manifest.write();
  } catch (const gdelt::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
