#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace gdelt {

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

inline std::string_view trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline void split_char(std::string_view line, char sep, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  out.push_back(line.substr(start));
}

// Replaces every invalid UTF-8 byte with U+FFFD in place. Returns the number of
// replaced bytes. Well-formed input is left untouched without reallocation.
inline std::size_t sanitize_utf8(std::string& s) {
  static constexpr const char* kReplacement = "\xEF\xBF\xBD";
  auto is_cont = [](unsigned char c) { return (c & 0xC0) == 0x80; };

  std::size_t replaced = 0;
  std::string out;
  bool copying = false;
  std::size_t i = 0;
  const std::size_t n = s.size();

  auto flush_valid = [&](std::size_t upto) {
    if (copying) out.append(s, i, upto - i);
  };
  auto bad_byte = [&](std::size_t at) {
    if (!copying) {
      out.assign(s, 0, at);
      copying = true;
    }
    out += kReplacement;
    ++replaced;
  };

  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    if (c < 0x80)
      len = 1;
    else if (c >= 0xC2 && c <= 0xDF)
      len = 2;
    else if (c >= 0xE0 && c <= 0xEF)
      len = 3;
    else if (c >= 0xF0 && c <= 0xF4)
      len = 4;
    else {
      bad_byte(i);
      ++i;
      continue;
    }
    if (i + len > n) {
      bad_byte(i);
      ++i;
      continue;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k)
      if (!is_cont(static_cast<unsigned char>(s[i + k]))) ok = false;
    if (!ok) {
      bad_byte(i);
      ++i;
      continue;
    }
    flush_valid(i + len);
    i += len;
  }
  if (copying) s = std::move(out);
  return replaced;
}

}  // namespace gdelt
