#pragma once

// Shared fixtures and independent oracles for the test suites. Everything here
// is test-only and deliberately avoids the library's aggregation internals:
// oracle code recomputes expectations with plain nested loops.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gdelt/date.hpp"
#include "gdelt/featurize.hpp"
#include "gdelt/parser.hpp"

namespace testsupport {

using gdelt::Date;
using gdelt::Days;

// ---- filesystem helpers ----------------------------------------------------

struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    path = std::filesystem::temp_directory_path() /
           ("gdelt_test_" + std::to_string(rng()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path file(const std::string& name) const { return path / name; }
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Purely alphabetic synthetic word ("prefix" + base-26 letters); the tokenizer
// drops digits, so numbered suffixes would collapse.
inline std::string alpha_word(const std::string& prefix, int i) {
  std::string s = prefix;
  do {
    s += static_cast<char>('a' + i % 26);
    i /= 26;
  } while (i > 0);
  return s;
}

// ---- synthetic event lines ---------------------------------------------------

struct EventLineSpec {
  long long id = 1;
  std::string sqldate = "20130613";
  std::string actor1_code, actor1_name, actor1_cc, actor1_ethnic;
  std::string actor2_code, actor2_name, actor2_cc, actor2_ethnic;
  std::string is_root = "1";
  std::string event_code = "010";
  std::string base_code = "010";
  std::string root_code = "01";
  std::string quad = "1";
  std::string goldstein = "0";
  std::string num_mentions = "1", num_sources = "1", num_articles = "1";
  std::string avg_tone = "0";
  std::string a1g_fullname, a1g_cc, a1g_adm1, a1g_lat, a1g_lon, a1g_fid;
  std::string a2g_fullname, a2g_cc, a2g_adm1, a2g_lat, a2g_lon, a2g_fid;
  std::string ag_fullname = "Singapore", ag_cc = "SN", ag_adm1 = "SN00";
  std::string ag_lat = "1.3", ag_lon = "103.8", ag_fid = "-2";
  std::string date_added = "20131231";
  std::string source_url = "http://www.straitstimes.com/article";
};

inline std::string make_event_line(const EventLineSpec& s, bool with_url = true) {
  std::vector<std::string> f(with_url ? 57 : 56);
  namespace col = gdelt::col;
  f[col::GlobalEventId] = std::to_string(s.id);
  f[col::SqlDate] = s.sqldate;
  f[col::MonthYear] = s.sqldate.substr(0, 6);
  f[col::Year] = s.sqldate.substr(0, 4);
  f[col::Actor1Code] = s.actor1_code;
  f[col::Actor1Name] = s.actor1_name;
  f[col::Actor1CountryCode] = s.actor1_cc;
  f[col::Actor1EthnicCode] = s.actor1_ethnic;
  f[col::Actor2Code] = s.actor2_code;
  f[col::Actor2Name] = s.actor2_name;
  f[col::Actor2CountryCode] = s.actor2_cc;
  f[col::Actor2EthnicCode] = s.actor2_ethnic;
  f[col::IsRootEvent] = s.is_root;
  f[col::EventCode] = s.event_code;
  f[col::EventBaseCode] = s.base_code;
  f[col::EventRootCode] = s.root_code;
  f[col::QuadClass] = s.quad;
  f[col::GoldsteinScale] = s.goldstein;
  f[col::NumMentions] = s.num_mentions;
  f[col::NumSources] = s.num_sources;
  f[col::NumArticles] = s.num_articles;
  f[col::AvgTone] = s.avg_tone;
  f[col::Actor1GeoType] = s.a1g_fullname.empty() ? "0" : "4";
  f[col::Actor1GeoFullname] = s.a1g_fullname;
  f[col::Actor1GeoCountryCode] = s.a1g_cc;
  f[col::Actor1GeoAdm1] = s.a1g_adm1;
  f[col::Actor1GeoLat] = s.a1g_lat;
  f[col::Actor1GeoLong] = s.a1g_lon;
  f[col::Actor1GeoFeatureId] = s.a1g_fid;
  f[col::Actor2GeoType] = s.a2g_fullname.empty() ? "0" : "4";
  f[col::Actor2GeoFullname] = s.a2g_fullname;
  f[col::Actor2GeoCountryCode] = s.a2g_cc;
  f[col::Actor2GeoAdm1] = s.a2g_adm1;
  f[col::Actor2GeoLat] = s.a2g_lat;
  f[col::Actor2GeoLong] = s.a2g_lon;
  f[col::Actor2GeoFeatureId] = s.a2g_fid;
  f[col::ActionGeoType] = s.ag_fullname.empty() ? "0" : "4";
  f[col::ActionGeoFullname] = s.ag_fullname;
  f[col::ActionGeoCountryCode] = s.ag_cc;
  f[col::ActionGeoAdm1] = s.ag_adm1;
  f[col::ActionGeoLat] = s.ag_lat;
  f[col::ActionGeoLong] = s.ag_lon;
  f[col::ActionGeoFeatureId] = s.ag_fid;
  f[col::DateAdded] = s.date_added;
  if (with_url) f[col::SourceUrl] = s.source_url;
  std::string line;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i) line += '\t';
    line += f[i];
  }
  return line;
}

inline std::string yyyymmdd(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d%02u%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// Randomized but fully valid event line over small alphabets, for bulk fixtures.
struct RandomEventOptions {
  Date start = *gdelt::make_date(2013, 4, 1);
  int n_days = 60;
  double p_missing_goldstein = 0.15;
  double p_missing_actor = 0.3;
  double p_other_country = 0.2;
  bool with_url = true;
};

inline std::string random_event_line(std::mt19937_64& rng, long long id,
                                     const RandomEventOptions& opt) {
  static const char* kRootCodes[] = {"01", "02", "03", "04", "10", "14", "17", "19"};
  static const char* kActors[] = {"SINGAPORE",  "GOVERNMENT", "POLICE",   "INDONESIA",
                                  "MALAYSIA",   "COMPANY",    "MINISTER", "CHINA"};
  static const char* kHosts[] = {"http://www.straitstimes.com/a",
                                 "http://www.channelnewsasia.com/b",
                                 "http://news.asiaone.com/c",
                                 "http://www.thejakartapost.com/d",
                                 "http://zeenews.india.com/e",
                                 "http://www.bbc.co.uk/f"};
  static const char* kPlaces[] = {"Singapore", "Toa Payoh", "Geylang", "Clementi", "Ang Mo Kio"};

  auto pick = [&](auto& arr) {
    return arr[std::uniform_int_distribution<std::size_t>(0, std::size(arr) - 1)(rng)];
  };
  auto chance = [&](double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
  };

  EventLineSpec s;
  s.id = id;
  const int day = std::uniform_int_distribution<int>(0, opt.n_days - 1)(rng);
  s.sqldate = yyyymmdd(opt.start + Days{day});
  s.root_code = pick(kRootCodes);
  const int sub = std::uniform_int_distribution<int>(0, 3)(rng);
  s.base_code = s.root_code + std::to_string(sub);
  s.event_code = s.base_code + std::to_string(std::uniform_int_distribution<int>(0, 2)(rng));
  s.quad = std::to_string(std::uniform_int_distribution<int>(1, 4)(rng));
  s.is_root = chance(0.6) ? "1" : "0";
  if (chance(opt.p_missing_goldstein)) {
    s.goldstein = "";
  } else {
    s.goldstein = fmt(std::uniform_real_distribution<double>(-10.0, 10.0)(rng));
  }
  s.avg_tone = fmt(std::uniform_real_distribution<double>(-12.0, 12.0)(rng));
  s.num_mentions = std::to_string(std::uniform_int_distribution<int>(1, 60)(rng));
  if (!chance(opt.p_missing_actor)) s.actor1_name = pick(kActors);
  if (!chance(opt.p_missing_actor)) s.actor2_name = pick(kActors);
  if (chance(opt.p_other_country)) {
    s.ag_cc = "MY";
    s.ag_fullname = "Malaysia";
    s.ag_lat = fmt(std::uniform_real_distribution<double>(1.0, 6.0)(rng));
    s.ag_lon = fmt(std::uniform_real_distribution<double>(100.0, 104.0)(rng));
  } else {
    s.ag_cc = "SN";
    s.ag_fullname = pick(kPlaces);
    s.ag_lat = fmt(std::uniform_real_distribution<double>(1.2, 1.5)(rng));
    s.ag_lon = fmt(std::uniform_real_distribution<double>(103.6, 104.0)(rng));
  }
  s.source_url = pick(kHosts);
  return make_event_line(s, opt.with_url);
}

// ---- market / key-event CSV fixtures ----------------------------------------

// Synthetic trading calendar: one bar per weekday from `start`, n bars total.
inline std::string market_csv(Date start, int bars, double base = 3000.0, double step = 1.0) {
  std::ostringstream os;
  os << "Date,Open,High,Low,Close,Volume,Adj Close\n";
  Date d = start;
  for (int i = 0; i < bars;) {
    if (!gdelt::is_weekend(d)) {
      const double px = base + step * i;
      os << gdelt::to_iso(d) << ',' << px - 1 << ',' << px + 2 << ',' << px - 2 << ',' << px << ','
         << 1000 + i << ',' << px << '\n';
      ++i;
    }
    d += Days{1};
  }
  return os.str();
}

inline std::string key_events_csv(const std::vector<std::pair<Date, std::string>>& events) {
  std::ostringstream os;
  os << "date,label,source\n";
  for (const auto& [d, label] : events)
    os << gdelt::to_iso(d) << ',' << label << ",wikipedia\n";
  return os.str();
}

// ---- independent rollup oracle ----------------------------------------------

// Naive nested-loop recomputation of every cell of a feature table: for each
// (row, column) pair it scans all records, re-deriving the temporal unit and
// bin membership with a linear boundary scan. No shared code with the rollup.
template <class S>
std::vector<double> oracle_cells(const S& source, const gdelt::FeatureTable& table) {
  using gdelt::ColumnKind;
  const auto& spec = table.spec;
  std::vector<double> cells(table.n_rows() * table.n_cols(), 0.0);

  auto unit_of = [&](Date d) -> Date {
    if (spec.resolution == gdelt::Resolution::day) return d;
    return gdelt::YearMonth::of(d).first_day();
  };
  auto bin_of = [&](double v, const gdelt::BinSet& b) -> int {
    for (int k = 1; k <= b.effective_bins(); ++k)
      if (v < b.boundaries[static_cast<std::size_t>(k - 1)]) return k;
    return b.effective_bins();  // last bin closed + clamp above
  };

  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
      const auto& meta = table.columns[c];
      double count = 0.0, sum = 0.0;
      const bool numeric = meta.kind == ColumnKind::numeric_bin ||
                           (meta.kind == ColumnKind::missing &&
                            std::any_of(spec.numeric_vars.begin(), spec.numeric_vars.end(),
                                        [&](const auto& nv) { return nv.name == meta.variable; }));
      const gdelt::BinSet* binset = nullptr;
      for (const auto& b : table.bins)
        if (b.variable == meta.variable) binset = &b;
      for (std::size_t i = 0; i < source.row_count(); ++i) {
        const auto t = source.time_value(i);
        if (!t || unit_of(*t) != table.rows[r]) continue;
        if (!numeric) {
          const auto v = source.nominal_value(meta.variable, i);
          const bool hit = meta.kind == ColumnKind::missing ? !v.has_value()
                                                            : (v.has_value() && *v == meta.value);
          if (hit) count += 1.0;
        } else {
          const auto v = source.numeric_value(meta.variable, i);
          if (meta.kind == ColumnKind::missing) {
            if (!v || binset->effective_bins() == 0) count += 1.0;
          } else if (v && binset && binset->effective_bins() > 0 &&
                     bin_of(*v, *binset) == meta.bin_index) {
            count += 1.0;
            sum += *v;
          }
        }
      }
      double value = count;
      if (meta.kind == ColumnKind::numeric_bin) {
        if (spec.aggregator == gdelt::Aggregator::sum)
          value = sum;
        else if (spec.aggregator == gdelt::Aggregator::avg)
          value = count > 0 ? sum / count : 0.0;
      }
      cells[r * table.n_cols() + c] = value;
    }
  }
  return cells;
}

// A tiny in-memory FeatureSource for synthetic rollup inputs.
struct MemorySource {
  std::vector<std::optional<Date>> times;
  std::map<std::string, std::vector<std::optional<std::string>>> nominals;
  std::map<std::string, std::vector<std::optional<double>>> numerics;

  std::size_t row_count() const { return times.size(); }
  std::optional<Date> time_value(std::size_t i) const { return times[i]; }
  bool has_nominal(std::string_view var) const { return nominals.count(std::string(var)) > 0; }
  bool has_numeric(std::string_view var) const { return numerics.count(std::string(var)) > 0; }
  std::optional<std::string> nominal_value(std::string_view var, std::size_t i) const {
    const auto it = nominals.find(std::string(var));
    return it == nominals.end() ? std::nullopt : it->second[i];
  }
  std::optional<double> numeric_value(std::string_view var, std::size_t i) const {
    const auto it = numerics.find(std::string(var));
    return it == numerics.end() ? std::nullopt : it->second[i];
  }
};

// ---- CLI runner --------------------------------------------------------------

inline int run_cli(const std::string& cli, const std::vector<std::string>& args,
                   std::string* output = nullptr) {
  TempDir capture;
  const auto out_file = capture.file("out.txt");
  std::string cmd = "'" + cli + "'";
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " > '" + out_file.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) *output = read_file(out_file);
  if (status < 0) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace testsupport
