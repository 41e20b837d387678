#pragma once

#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gdelt/error.hpp"
#include "gdelt/strings.hpp"

namespace gdelt {

// Minimal RFC-4180 reader: quoted fields, doubled-quote escapes, quoted
// newlines, and both LF and CRLF endings. Blank lines are skipped.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Fills `fields` with the next record. Returns false at end of input.
  bool next(std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool saw_any = false;
    int c;
    while ((c = in_.get()) != std::char_traits<char>::eof()) {
      const char ch = static_cast<char>(c);
      if (in_quotes) {
        if (ch == '"') {
          if (in_.peek() == '"') {
            field += '"';
            in_.get();
          } else {
            in_quotes = false;
          }
        } else {
          field += ch;
        }
        saw_any = true;
        continue;
      }
      switch (ch) {
        case '"':
          in_quotes = true;
          saw_any = true;
          break;
        case ',':
          fields.push_back(std::move(field));
          field.clear();
          saw_any = true;
          break;
        case '\r':
          break;
        case '\n':
          ++line_;
          if (!saw_any) break;  // blank line
          fields.push_back(std::move(field));
          return true;
        default:
          field += ch;
          saw_any = true;
      }
    }
    if (saw_any) {
      fields.push_back(std::move(field));
      return true;
    }
    return false;
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
};

// Shortest round-trip representation; keeps emitted files byte-stable.
inline std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string csv_escape(std::string_view f) {
  const bool needs_quotes = f.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(f);
  std::string out;
  out.reserve(f.size() + 2);
  out += '"';
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_csv_row(std::ostream& os, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << csv_escape(fields[i]);
  }
  os << '\n';
}

// Resolves required header columns by exact token match after trimming.
// Throws Error naming the first header that cannot be found.
inline std::vector<std::size_t> resolve_header(const std::vector<std::string>& header,
                                               std::span<const std::string_view> wanted,
                                               std::string_view what) {
  std::vector<std::size_t> idx;
  idx.reserve(wanted.size());
  for (const auto name : wanted) {
    std::size_t found = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) {
        found = i;
        break;
      }
    }
    if (found == header.size())
      throw Error(std::string(what) + ": missing required column '" + std::string(name) + "'");
    idx.push_back(found);
  }
  return idx;
}

}  // namespace gdelt
