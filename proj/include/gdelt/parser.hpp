#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gdelt/date.hpp"
#include "gdelt/error.hpp"
#include "gdelt/strings.hpp"
#include "json.hpp"

namespace gdelt {

// Column layout of the event table. The legacy backfile has 56 tab-delimited
// columns; daily files gained a trailing SOURCEURL column (57 total).
namespace col {
enum : std::size_t {
  GlobalEventId = 0,
  SqlDate,
  MonthYear,
  Year,
  Actor1Code,
  Actor1Name,
  Actor1CountryCode,
  Actor1KnownGroupCode,
  Actor1EthnicCode,
  Actor1Religion1Code,
  Actor1Religion2Code,
  Actor1Type1Code,
  Actor1Type2Code,
  Actor1Type3Code,
  Actor2Code,
  Actor2Name,
  Actor2CountryCode,
  Actor2KnownGroupCode,
  Actor2EthnicCode,
  Actor2Religion1Code,
  Actor2Religion2Code,
  Actor2Type1Code,
  Actor2Type2Code,
  Actor2Type3Code,
  IsRootEvent,
  EventCode,
  EventBaseCode,
  EventRootCode,
  QuadClass,
  GoldsteinScale,
  NumMentions,
  NumSources,
  NumArticles,
  AvgTone,
  Actor1GeoType,
  Actor1GeoFullname,
  Actor1GeoCountryCode,
  Actor1GeoAdm1,
  Actor1GeoLat,
  Actor1GeoLong,
  Actor1GeoFeatureId,
  Actor2GeoType,
  Actor2GeoFullname,
  Actor2GeoCountryCode,
  Actor2GeoAdm1,
  Actor2GeoLat,
  Actor2GeoLong,
  Actor2GeoFeatureId,
  ActionGeoType,
  ActionGeoFullname,
  ActionGeoCountryCode,
  ActionGeoAdm1,
  ActionGeoLat,
  ActionGeoLong,
  ActionGeoFeatureId,
  DateAdded,
  SourceUrl,
};
}  // namespace col

constexpr std::size_t kLegacyColumnCount = 56;   // ... DATEADDED
constexpr std::size_t kSourceUrlColumnCount = 57;  // ... DATEADDED, SOURCEURL

struct TableSchema {
  bool has_source_url = true;

  std::size_t column_count() const { return has_source_url ? kSourceUrlColumnCount : kLegacyColumnCount; }
  std::string_view name() const { return has_source_url ? "57col" : "56col"; }

  static std::optional<TableSchema> from_name(std::string_view s) {
    if (s == "57col") return TableSchema{true};
    if (s == "56col") return TableSchema{false};
    return std::nullopt;
  }
};

struct GeoRef {
  std::optional<std::string> country_code;  // 2-char FIPS
  std::optional<std::string> fullname;
  std::optional<double> latitude;
  std::optional<double> longitude;
  std::optional<std::string> adm1;
  std::optional<std::string> feature_id;
  // Coordinates without a country code (or one coordinate without the other).
  bool malformed = false;

  bool has_coordinates() const { return latitude.has_value() && longitude.has_value(); }
};

struct EventRecord {
  std::int64_t global_event_id = 0;
  Date sql_date{};
  std::optional<std::string> actor1_name, actor2_name;
  std::optional<std::string> actor1_country_code, actor2_country_code;
  std::optional<std::string> actor1_ethnic_code, actor2_ethnic_code;
  bool is_root_event = false;
  std::string event_code;       // 2-4 digits
  std::string event_base_code;  // 2-3 digits
  std::string event_root_code;  // 2 digits
  int quad_class = 0;           // 1..4
  std::optional<double> goldstein_scale;  // [-10, +10]
  std::optional<std::int64_t> num_mentions, num_sources, num_articles;
  std::optional<double> avg_tone;
  GeoRef actor1_geo, actor2_geo, action_geo;
  Date date_added{};
  std::optional<std::string> source_url;
  // Root/base/code prefix chain broken; the record is kept, never dropped.
  bool hierarchy_violation = false;
};

enum class RejectCode { column_count, field_format, domain };

inline std::string_view reject_code_name(RejectCode c) {
  switch (c) {
    case RejectCode::column_count: return "column_count";
    case RejectCode::field_format: return "field_format";
    case RejectCode::domain: return "domain";
  }
  return "unknown";
}

struct RejectReason {
  RejectCode code;
  std::string field;  // offending column name, empty for column_count
};

using ParseResult = std::variant<EventRecord, RejectReason>;

struct RejectedLine {
  std::size_t line_no = 0;
  RejectCode code{};
  std::string field;
};

struct ParseReport {
  std::size_t lines_read = 0;
  std::size_t records_accepted = 0;
  std::size_t records_rejected = 0;
  std::size_t blank_or_comment_lines = 0;
  std::size_t utf8_replacements = 0;
  std::size_t hierarchy_warnings = 0;
  std::vector<RejectedLine> rejects;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["lines_read"] = lines_read;
    j["records_accepted"] = records_accepted;
    j["records_rejected"] = records_rejected;
    j["blank_or_comment_lines"] = blank_or_comment_lines;
    j["diagnostics"] = {{"utf8_replacements", utf8_replacements},
                        {"hierarchy_warnings", hierarchy_warnings}};
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : rejects) {
      nlohmann::ordered_json e;
      e["line"] = r.line_no;
      e["reason"] = reject_code_name(r.code);
      e["field"] = r.field;
      arr.push_back(std::move(e));
    }
    j["rejects"] = std::move(arr);
    return j;
  }
};

namespace detail {

inline const char* const kColumnNames[kSourceUrlColumnCount] = {
    "GLOBALEVENTID", "SQLDATE", "MonthYear", "Year",
    "Actor1Code", "Actor1Name", "Actor1CountryCode", "Actor1KnownGroupCode", "Actor1EthnicCode",
    "Actor1Religion1Code", "Actor1Religion2Code", "Actor1Type1Code", "Actor1Type2Code",
    "Actor1Type3Code",
    "Actor2Code", "Actor2Name", "Actor2CountryCode", "Actor2KnownGroupCode", "Actor2EthnicCode",
    "Actor2Religion1Code", "Actor2Religion2Code", "Actor2Type1Code", "Actor2Type2Code",
    "Actor2Type3Code",
    "IsRootEvent", "EventCode", "EventBaseCode", "EventRootCode", "QuadClass", "GoldsteinScale",
    "NumMentions", "NumSources", "NumArticles", "AvgTone",
    "Actor1Geo_Type", "Actor1Geo_Fullname", "Actor1Geo_CountryCode", "Actor1Geo_ADM1Code",
    "Actor1Geo_Lat", "Actor1Geo_Long", "Actor1Geo_FeatureID",
    "Actor2Geo_Type", "Actor2Geo_Fullname", "Actor2Geo_CountryCode", "Actor2Geo_ADM1Code",
    "Actor2Geo_Lat", "Actor2Geo_Long", "Actor2Geo_FeatureID",
    "ActionGeo_Type", "ActionGeo_Fullname", "ActionGeo_CountryCode", "ActionGeo_ADM1Code",
    "ActionGeo_Lat", "ActionGeo_Long", "ActionGeo_FeatureID",
    "DATEADDED", "SOURCEURL"};

inline std::optional<std::string> opt_text(std::string_view f) {
  if (f.empty()) return std::nullopt;
  return std::string(f);
}

inline bool parse_i64(std::string_view f, std::int64_t& out) {
  const char* end = f.data() + f.size();
  auto [p, ec] = std::from_chars(f.data(), end, out);
  return ec == std::errc{} && p == end;
}

inline bool parse_f64(std::string_view f, double& out) {
  const char* end = f.data() + f.size();
  auto [p, ec] = std::from_chars(f.data(), end, out);
  return ec == std::errc{} && p == end;
}

inline bool all_digits(std::string_view f) {
  if (f.empty()) return false;
  for (char c : f)
    if (c < '0' || c > '9') return false;
  return true;
}

}  // namespace detail

inline std::string_view column_name(std::size_t idx) {
  return idx < kSourceUrlColumnCount ? detail::kColumnNames[idx] : "?";
}

inline std::string_view quad_class_name(int q) {
  switch (q) {
    case 1: return "Verbal Cooperation";
    case 2: return "Material Cooperation";
    case 3: return "Verbal Conflict";
    case 4: return "Material Conflict";
  }
  return "?";
}

// Parses one tab-delimited line (already UTF-8 sanitized) against the schema.
// Field mapping is strict: empty strings become absent optionals, numeric
// fields must consume the whole token, out-of-domain values reject the line.
inline ParseResult parse_line(std::string_view line, const TableSchema& schema) {
  std::vector<std::string_view> f;
  f.reserve(schema.column_count());
  split_char(line, '\t', f);
  if (f.size() != schema.column_count())
    return RejectReason{RejectCode::column_count, ""};

  auto format_error = [&](std::size_t c) {
    return RejectReason{RejectCode::field_format, std::string(column_name(c))};
  };
  auto domain_error = [&](std::size_t c) {
    return RejectReason{RejectCode::domain, std::string(column_name(c))};
  };

  EventRecord r;

  if (!detail::parse_i64(f[col::GlobalEventId], r.global_event_id))
    return format_error(col::GlobalEventId);

  if (auto d = date_from_yyyymmdd(f[col::SqlDate]))
    r.sql_date = *d;
  else
    return format_error(col::SqlDate);

  r.actor1_name = detail::opt_text(f[col::Actor1Name]);
  r.actor2_name = detail::opt_text(f[col::Actor2Name]);
  r.actor1_country_code = detail::opt_text(f[col::Actor1CountryCode]);
  r.actor2_country_code = detail::opt_text(f[col::Actor2CountryCode]);
  r.actor1_ethnic_code = detail::opt_text(f[col::Actor1EthnicCode]);
  r.actor2_ethnic_code = detail::opt_text(f[col::Actor2EthnicCode]);

  if (f[col::IsRootEvent] == "1")
    r.is_root_event = true;
  else if (f[col::IsRootEvent] == "0")
    r.is_root_event = false;
  else
    return format_error(col::IsRootEvent);

  auto code_field = [&](std::size_t c, std::size_t min_len, std::size_t max_len,
                        std::string& out) -> bool {
    const auto v = f[c];
    if (!detail::all_digits(v) || v.size() < min_len || v.size() > max_len) return false;
    out = std::string(v);
    return true;
  };
  if (!code_field(col::EventCode, 2, 4, r.event_code)) return format_error(col::EventCode);
  if (!code_field(col::EventBaseCode, 2, 3, r.event_base_code))
    return format_error(col::EventBaseCode);
  if (!code_field(col::EventRootCode, 2, 2, r.event_root_code))
    return format_error(col::EventRootCode);

  std::int64_t quad = 0;
  if (!detail::parse_i64(f[col::QuadClass], quad)) return format_error(col::QuadClass);
  if (quad < 1 || quad > 4) return domain_error(col::QuadClass);
  r.quad_class = static_cast<int>(quad);

  auto opt_f64 = [&](std::size_t c, std::optional<double>& out) -> bool {
    if (f[c].empty()) {
      out.reset();
      return true;
    }
    double v = 0;
    if (!detail::parse_f64(f[c], v)) return false;
    out = v;
    return true;
  };
  auto opt_i64 = [&](std::size_t c, std::optional<std::int64_t>& out) -> bool {
    if (f[c].empty()) {
      out.reset();
      return true;
    }
    std::int64_t v = 0;
    if (!detail::parse_i64(f[c], v)) return false;
    out = v;
    return true;
  };

  if (!opt_f64(col::GoldsteinScale, r.goldstein_scale)) return format_error(col::GoldsteinScale);
  if (r.goldstein_scale && (*r.goldstein_scale < -10.0 || *r.goldstein_scale > 10.0))
    return domain_error(col::GoldsteinScale);

  if (!opt_i64(col::NumMentions, r.num_mentions)) return format_error(col::NumMentions);
  if (!opt_i64(col::NumSources, r.num_sources)) return format_error(col::NumSources);
  if (!opt_i64(col::NumArticles, r.num_articles)) return format_error(col::NumArticles);
  if ((r.num_mentions && *r.num_mentions < 0) || (r.num_sources && *r.num_sources < 0) ||
      (r.num_articles && *r.num_articles < 0)) {
    const std::size_t c = (r.num_mentions && *r.num_mentions < 0)  ? col::NumMentions
                          : (r.num_sources && *r.num_sources < 0) ? col::NumSources
                                                                   : col::NumArticles;
    return domain_error(c);
  }

  if (!opt_f64(col::AvgTone, r.avg_tone)) return format_error(col::AvgTone);

  auto parse_geo = [&](std::size_t base, GeoRef& g) -> std::optional<RejectReason> {
    // base points at *_Type; fullname, country, adm1, lat, long, feature follow.
    g.fullname = detail::opt_text(f[base + 1]);
    g.country_code = detail::opt_text(f[base + 2]);
    g.adm1 = detail::opt_text(f[base + 3]);
    if (!opt_f64(base + 4, g.latitude)) return format_error(base + 4);
    if (!opt_f64(base + 5, g.longitude)) return format_error(base + 5);
    g.feature_id = detail::opt_text(f[base + 6]);
    if (g.latitude && (*g.latitude < -90.0 || *g.latitude > 90.0)) return domain_error(base + 4);
    if (g.longitude && (*g.longitude < -180.0 || *g.longitude > 180.0))
      return domain_error(base + 5);
    const bool any_coord = g.latitude.has_value() || g.longitude.has_value();
    g.malformed = any_coord && (!g.has_coordinates() || !g.country_code.has_value());
    return std::nullopt;
  };
  if (auto rej = parse_geo(col::Actor1GeoType, r.actor1_geo)) return *rej;
  if (auto rej = parse_geo(col::Actor2GeoType, r.actor2_geo)) return *rej;
  if (auto rej = parse_geo(col::ActionGeoType, r.action_geo)) return *rej;

  if (auto d = date_from_yyyymmdd(f[col::DateAdded]))
    r.date_added = *d;
  else
    return format_error(col::DateAdded);

  if (schema.has_source_url) r.source_url = detail::opt_text(f[col::SourceUrl]);

  // Historical data carries inconsistent code chains; warn, never drop.
  const bool base_ok = r.event_base_code.starts_with(r.event_root_code);
  const bool code_ok = r.event_code.starts_with(r.event_base_code);
  r.hierarchy_violation = !(base_ok && code_ok);

  return r;
}

struct ParsedFile {
  std::vector<EventRecord> records;
  ParseReport report;
};

// Streams tab-delimited lines through parse_line. `on_record` receives each
// accepted record together with its sanitized source line (used by the CLI to
// echo clean files); pass nullptr-like no-ops when not needed.
template <class OnRecord>
inline ParseReport parse_stream(std::istream& in, const TableSchema& schema, OnRecord&& on_record) {
  ParseReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    ++report.lines_read;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto trimmed = trim(line);
    if (trimmed.empty() || trimmed.front() == '#') {
      ++report.blank_or_comment_lines;
      continue;
    }
    report.utf8_replacements += sanitize_utf8(line);
    ParseResult res = parse_line(line, schema);
    if (auto* rec = std::get_if<EventRecord>(&res)) {
      ++report.records_accepted;
      if (rec->hierarchy_violation) ++report.hierarchy_warnings;
      on_record(*rec, line);
    } else {
      const auto& rej = std::get<RejectReason>(res);
      ++report.records_rejected;
      report.rejects.push_back({line_no, rej.code, rej.field});
    }
  }
  return report;
}

inline ParsedFile parse_file(const std::string& path, const TableSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open event file: " + path);
  ParsedFile out;
  out.report = parse_stream(in, schema,
                            [&](const EventRecord& r, const std::string&) { out.records.push_back(r); });
  return out;
}

// Keeps records whose ActionGeo country equals `code`, case-insensitively,
// preserving input order.
inline std::vector<EventRecord> filter_country(std::span<const EventRecord> records,
                                               std::string_view code) {
  std::vector<EventRecord> out;
  for (const auto& r : records) {
    if (r.action_geo.country_code && iequals(*r.action_geo.country_code, code))
      out.push_back(r);
  }
  return out;
}

// Lowercased authority host with credentials and port stripped. Returns
// nullopt for anything that does not look like scheme://host...
inline std::optional<std::string> extract_host(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos || scheme_end == 0) return std::nullopt;
  for (std::size_t i = 0; i < scheme_end; ++i) {
    const char c = url[i];
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (i > 0 && ((c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.'));
    if (!ok) return std::nullopt;
  }
  std::string_view rest = url.substr(scheme_end + 3);
  const auto path_start = rest.find_first_of("/?#");
  std::string_view authority = path_start == std::string_view::npos ? rest : rest.substr(0, path_start);
  if (const auto at = authority.rfind('@'); at != std::string_view::npos)
    authority = authority.substr(at + 1);
  std::string_view host;
  if (!authority.empty() && authority.front() == '[') {
    const auto close = authority.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    host = authority.substr(1, close - 1);
  } else {
    const auto colon = authority.find(':');
    host = colon == std::string_view::npos ? authority : authority.substr(0, colon);
  }
  if (host.empty()) return std::nullopt;
  for (char c : host)
    if (std::isspace(static_cast<unsigned char>(c))) return std::nullopt;
  return to_lower(host);
}

// Same as above but tallies syntactically invalid non-empty URLs.
inline std::optional<std::string> extract_host(const std::optional<std::string>& url,
                                               std::size_t& invalid_tally) {
  if (!url) return std::nullopt;
  auto host = extract_host(*url);
  if (!host) ++invalid_tally;
  return host;
}

}  // namespace gdelt
