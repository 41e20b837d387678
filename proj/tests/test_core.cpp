#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "gdelt/csv.hpp"
#include "gdelt/date.hpp"
#include "gdelt/strings.hpp"

using namespace gdelt;

TEST_CASE("date parsing round-trips") {
  const auto d = date_from_yyyymmdd("20130613");
  REQUIRE(d.has_value());
  CHECK(to_iso(*d) == "2013-06-13");
  CHECK(date_from_iso("2013-06-13") == d);

  CHECK_FALSE(date_from_yyyymmdd("20130632").has_value());  // no June 32nd
  CHECK_FALSE(date_from_yyyymmdd("20131313").has_value());
  CHECK_FALSE(date_from_yyyymmdd("2013061").has_value());
  CHECK_FALSE(date_from_yyyymmdd("2013-6-13").has_value());
  CHECK(date_from_yyyymmdd("20120229").has_value());   // leap day
  CHECK_FALSE(date_from_yyyymmdd("20130229").has_value());
}

TEST_CASE("year-month grouping") {
  const auto d = *date_from_iso("2013-12-08");
  const auto ym = YearMonth::of(d);
  CHECK(ym.str() == "2013-12");
  CHECK(to_iso(ym.first_day()) == "2013-12-01");
  CHECK(YearMonth{2013, 11} < ym);
  CHECK(yearmonth_from_iso("2013-12") == ym);
}

TEST_CASE("day arithmetic and weekends") {
  const auto fri = *date_from_iso("2013-06-14");
  CHECK_FALSE(is_weekend(fri));
  CHECK(is_weekend(fri + Days{1}));
  CHECK(is_weekend(fri + Days{2}));
  CHECK_FALSE(is_weekend(fri + Days{3}));
}

TEST_CASE("string helpers") {
  CHECK(to_lower("Www.StraitsTimes.COM") == "www.straitstimes.com");
  CHECK(iequals("sg", "SG"));
  CHECK_FALSE(iequals("sg", "sgp"));
  CHECK(trim("  x \t") == "x");
  std::vector<std::string_view> parts;
  split_char("a\t\tb", '\t', parts);
  REQUIRE(parts.size() == 3);
  CHECK(parts[1].empty());
}

TEST_CASE("utf8 sanitizer replaces invalid bytes and counts them") {
  std::string ok = "caf\xC3\xA9";
  CHECK(sanitize_utf8(ok) == 0);
  CHECK(ok == "caf\xC3\xA9");

  std::string bad = "a\xFFz";
  CHECK(sanitize_utf8(bad) == 1);
  CHECK(bad == "a\xEF\xBF\xBDz");

  std::string truncated = "x\xC3";  // lead byte with no continuation
  CHECK(sanitize_utf8(truncated) == 1);
  CHECK(truncated == "x\xEF\xBF\xBD");
}

TEST_CASE("csv reader handles quoting and blank lines") {
  std::istringstream in("a,b,c\n\n\"x,y\",\"he said \"\"hi\"\"\",3\r\nlast,,\n");
  CsvReader reader(in);
  std::vector<std::string> row;
  REQUIRE(reader.next(row));
  CHECK(row == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(reader.next(row));
  CHECK(row == std::vector<std::string>{"x,y", "he said \"hi\"", "3"});
  REQUIRE(reader.next(row));
  CHECK(row == std::vector<std::string>{"last", "", ""});
  CHECK_FALSE(reader.next(row));
}

TEST_CASE("csv writer escapes exactly what needs escaping") {
  std::ostringstream os;
  const std::vector<std::string> row = {"plain", "with,comma", "with\"quote", ""};
  write_csv_row(os, row);
  CHECK(os.str() == "plain,\"with,comma\",\"with\"\"quote\",\n");
}

TEST_CASE("fmt_double is stable and minimal") {
  CHECK(fmt_double(5.0) == "5");
  CHECK(fmt_double(0.5) == "0.5");
  CHECK(fmt_double(-10.0) == "-10");
}
