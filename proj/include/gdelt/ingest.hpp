#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gdelt/csv.hpp"
#include "gdelt/date.hpp"
#include "gdelt/error.hpp"
#include "gdelt/parser.hpp"
#include "json.hpp"

namespace gdelt {

struct KeyEvent {
  Date date{};
  std::string label;
  std::string source;
};

struct MarketBar {
  Date date{};
  double open = 0, high = 0, low = 0, close = 0, adj_close = 0;
  std::int64_t volume = 0;
};

struct MarketSeries {
  std::vector<MarketBar> bars;           // strictly ascending by date
  std::vector<std::string> warnings;     // OHLC anomalies, kept rows
};

struct ArticleDoc {
  std::string doc_id;
  Date date{};
  std::optional<std::string> url_host;
  std::string text;
};

struct Corpus {
  std::vector<ArticleDoc> docs;
  std::size_t skipped_empty = 0;
};

// Key events arrive as a prepared CSV: header `date,label,source`, ISO dates.
inline std::vector<KeyEvent> load_key_events(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open key-event file: " + path);
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw Error("key-event file is empty: " + path);
  static constexpr std::string_view kCols[] = {"date", "label", "source"};
  const auto idx = resolve_header(row, kCols, "key-event file");
  std::vector<KeyEvent> out;
  std::size_t line = 1;
  while (reader.next(row)) {
    ++line;
    if (row.size() <= std::max({idx[0], idx[1], idx[2]}))
      throw Error("key-event file: short row at line " + std::to_string(line));
    const auto d = date_from_iso(trim(row[idx[0]]));
    if (!d)
      throw Error("key-event file: bad date '" + row[idx[0]] + "' at line " + std::to_string(line));
    KeyEvent e{*d, std::string(trim(row[idx[1]])), std::string(trim(row[idx[2]]))};
    if (e.label.empty())
      throw Error("key-event file: empty label at line " + std::to_string(line));
    out.push_back(std::move(e));
  }
  return out;
}

// Yahoo-Finance style export. Header tokens must match exactly after trimming;
// column order is free. Bars come back sorted ascending by date.
inline MarketSeries load_market(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open market file: " + path);
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw Error("market file is empty: " + path);
  static constexpr std::string_view kCols[] = {"Date", "Open",   "High",     "Low",
                                               "Close", "Volume", "Adj Close"};
  const auto idx = resolve_header(row, kCols, "market file");

  MarketSeries series;
  std::size_t line = 1;
  while (reader.next(row)) {
    ++line;
    if (row.size() <= *std::max_element(idx.begin(), idx.end()))
      throw Error("market file: short row at line " + std::to_string(line));
    MarketBar bar;
    const auto d = date_from_iso(trim(row[idx[0]]));
    if (!d)
      throw Error("market file: bad date '" + row[idx[0]] + "' at line " + std::to_string(line));
    bar.date = *d;
    auto num = [&](std::size_t k, double& out) {
      const auto t = trim(row[idx[k]]);
      double v = 0;
      if (!detail::parse_f64(t, v))
        throw Error("market file: bad number '" + std::string(t) + "' at line " +
                    std::to_string(line));
      out = v;
    };
    num(1, bar.open);
    num(2, bar.high);
    num(3, bar.low);
    num(4, bar.close);
    double volume = 0;
    num(5, volume);
    bar.volume = static_cast<std::int64_t>(volume);
    num(6, bar.adj_close);
    if (bar.volume < 0)
      throw Error("market file: negative volume at line " + std::to_string(line));

    // Real feeds contain anomalies; the prediction target only needs adj_close,
    // so OHLC violations warn and the row stays.
    if (bar.low > std::min(bar.open, bar.close) || bar.high < std::max(bar.open, bar.close))
      series.warnings.push_back("OHLC range violated on " + to_iso(bar.date));
    if (bar.adj_close <= 0)
      series.warnings.push_back("non-positive adjusted close on " + to_iso(bar.date));
    series.bars.push_back(bar);
  }

  std::stable_sort(series.bars.begin(), series.bars.end(),
                   [](const MarketBar& a, const MarketBar& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < series.bars.size(); ++i) {
    if (series.bars[i].date == series.bars[i - 1].date)
      throw Error("market file: duplicate date " + to_iso(series.bars[i].date));
  }
  return series;
}

namespace detail {

inline std::vector<Date> sorted_event_dates(std::span<const KeyEvent> events) {
  std::vector<Date> dates;
  dates.reserve(events.size());
  for (const auto& e : events) dates.push_back(e.date);
  std::sort(dates.begin(), dates.end());
  dates.erase(std::unique(dates.begin(), dates.end()), dates.end());
  return dates;
}

}  // namespace detail

// Flags records whose date falls within [event - before_days, event + after_days]
// of any key event (closed interval on both ends). Output is aligned 1:1 with
// the input; records are never dropped or duplicated.
inline std::vector<std::uint8_t> join_window(std::span<const EventRecord> records,
                                             std::span<const KeyEvent> events, int before_days,
                                             int after_days) {
  if (before_days < 0 || after_days < 0)
    throw Error("join_window: window days must be non-negative");
  const auto dates = detail::sorted_event_dates(events);
  std::vector<std::uint8_t> flags(records.size(), 0);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Date d = records[i].sql_date;
    // d in [e - before, e + after]  <=>  e in [d - after, d + before]
    const Date lo = d - Days{after_days};
    const Date hi = d + Days{before_days};
    const auto it = std::lower_bound(dates.begin(), dates.end(), lo);
    flags[i] = (it != dates.end() && *it <= hi) ? 1 : 0;
  }
  return flags;
}

inline std::vector<std::uint8_t> join_same_date(std::span<const EventRecord> records,
                                                std::span<const KeyEvent> events) {
  return join_window(records, events, 0, 0);
}

namespace detail {

inline void add_doc(Corpus& corpus, std::set<std::string>& seen, ArticleDoc&& doc,
                    const std::string& where) {
  if (doc.text.empty()) {
    ++corpus.skipped_empty;
    return;
  }
  if (!seen.insert(doc.doc_id).second)
    throw Error("corpus: duplicate doc_id '" + doc.doc_id + "' in " + where);
  corpus.docs.push_back(std::move(doc));
}

inline Corpus load_corpus_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file: " + path);
  Corpus corpus;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error("corpus: bad JSON at line " + std::to_string(line_no) + ": " + e.what());
    }
    ArticleDoc doc;
    doc.doc_id = j.value("doc_id", "");
    if (doc.doc_id.empty())
      throw Error("corpus: missing doc_id at line " + std::to_string(line_no));
    const auto d = date_from_iso(j.value("date", ""));
    if (!d) throw Error("corpus: bad date at line " + std::to_string(line_no));
    doc.date = *d;
    if (j.contains("url_host") && j["url_host"].is_string() && !j["url_host"].empty())
      doc.url_host = j["url_host"].get<std::string>();
    doc.text = j.value("text", "");
    add_doc(corpus, seen, std::move(doc), path);
  }
  return corpus;
}

inline Corpus load_corpus_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus manifest: " + path);
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) throw Error("corpus manifest is empty: " + path);
  static constexpr std::string_view kCols[] = {"doc_id", "date", "url_host", "filename"};
  const auto idx = resolve_header(row, kCols, "corpus manifest");
  const auto dir = std::filesystem::path(path).parent_path();

  struct Entry {
    ArticleDoc doc;
    std::filesystem::path file;
  };
  std::vector<Entry> entries;
  std::vector<std::string> missing;
  std::size_t line = 1;
  while (reader.next(row)) {
    ++line;
    if (row.size() <= *std::max_element(idx.begin(), idx.end()))
      throw Error("corpus manifest: short row at line " + std::to_string(line));
    Entry e;
    e.doc.doc_id = trim(row[idx[0]]);
    const auto d = date_from_iso(trim(row[idx[1]]));
    if (!d) throw Error("corpus manifest: bad date at line " + std::to_string(line));
    e.doc.date = *d;
    const auto host = trim(row[idx[2]]);
    if (!host.empty()) e.doc.url_host = std::string(host);
    e.file = dir / std::string(trim(row[idx[3]]));
    if (!std::filesystem::exists(e.file)) missing.push_back(e.file.string());
    entries.push_back(std::move(e));
  }
  if (!missing.empty()) {
    std::string msg = "corpus manifest: missing files:";
    for (const auto& m : missing) msg += " " + m;
    throw Error(msg);
  }

  Corpus corpus;
  std::set<std::string> seen;
  for (auto& e : entries) {
    std::ifstream doc_in(e.file, std::ios::binary);
    std::ostringstream body;
    body << doc_in.rdbuf();
    e.doc.text = body.str();
    add_doc(corpus, seen, std::move(e.doc), path);
  }
  return corpus;
}

}  // namespace detail

// Accepts either a JSON-lines file (doc_id, date, url_host, text per line) or
// a manifest CSV naming per-document text files. Empty bodies are skipped and
// counted, never an error.
inline Corpus load_corpus(const std::string& path) {
  if (path.ends_with(".jsonl") || path.ends_with(".ndjson"))
    return detail::load_corpus_jsonl(path);
  return detail::load_corpus_manifest(path);
}

}  // namespace gdelt
