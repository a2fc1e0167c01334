/*
 * Copyright 2026 The lidarprior Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Locale-independent number formatting and the small line-oriented text
// formats shared by the file readers (key/value configs, whitespace tables).

#ifndef LIDARPRIOR_TEXT_HPP
#define LIDARPRIOR_TEXT_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "lidarprior/error.hpp"

namespace lidarprior::text {

/// Shortest decimal that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw PipelineError("format_double: to_chars failed");
  return std::string(buf, end);
}

/// Fixed-point formatting for human-facing reports.
inline std::string format_fixed(double v, int precision) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed,
                                 precision);
  if (ec != std::errc()) throw PipelineError("format_fixed: to_chars failed");
  return std::string(buf, end);
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline double parse_double(std::string_view s, std::string_view what) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(std::string(what) + ": expected a number, got '" + std::string(s) +
                     "'");
  }
  return v;
}

inline std::int64_t parse_int(std::string_view s, std::string_view what) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(std::string(what) + ": expected an integer, got '" +
                     std::string(s) + "'");
  }
  return v;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string> read_lines(const std::string& path) {
  const std::string content = read_file(path);
  std::vector<std::string> lines;
  std::istringstream ss(content);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw InputError("write failed for '" + path + "'");
}

/**
 * INI-style configuration: `[section name]` headers and `key = value` lines.
 * `#` starts a comment. Sections may repeat (e.g. several `[actor ...]`
 * blocks), so they are kept in file order.
 */
struct ConfigSection {
  std::string kind;  // first word of the header, e.g. "actor"
  std::string name;  // remainder of the header, may be empty
  int line = 0;
  std::vector<std::pair<std::string, std::string>> entries;

  const std::string* find(std::string_view key) const {
    for (const auto& [k, v] : entries) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

struct ConfigFile {
  std::vector<ConfigSection> sections;  // sections[0] is the unnamed global one

  static ConfigFile parse(std::string_view content) {
    ConfigFile cfg;
    cfg.sections.push_back({});
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
      std::size_t nl = content.find('\n', pos);
      if (nl == std::string_view::npos) nl = content.size();
      std::string_view line = content.substr(pos, nl - pos);
      pos = nl + 1;
      ++line_no;
      if (auto hash = line.find('#'); hash != std::string_view::npos) {
        line = line.substr(0, hash);
      }
      line = trim(line);
      if (line.empty()) {
        if (nl == content.size()) break;
        continue;
      }
      if (line.front() == '[') {
        if (line.back() != ']') {
          throw ParseError("config line " + std::to_string(line_no) +
                           ": unterminated section header");
        }
        auto inner = trim(line.substr(1, line.size() - 2));
        ConfigSection sec;
        sec.line = line_no;
        auto sp = inner.find_first_of(" \t");
        sec.kind = std::string(inner.substr(0, sp));
        if (sp != std::string_view::npos) sec.name = std::string(trim(inner.substr(sp)));
        cfg.sections.push_back(std::move(sec));
      } else {
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
          throw ParseError("config line " + std::to_string(line_no) +
                           ": expected 'key = value'");
        }
        cfg.sections.back().entries.emplace_back(std::string(trim(line.substr(0, eq))),
                                                 std::string(trim(line.substr(eq + 1))));
      }
      if (nl == content.size()) break;
    }
    return cfg;
  }

  static ConfigFile load(const std::string& path) { return parse(read_file(path)); }

  /// Looks up `key` in the first section of the given kind ("" = global).
  const std::string* find(std::string_view kind, std::string_view key) const {
    for (const auto& s : sections) {
      if (s.kind == kind) {
        if (const auto* v = s.find(key)) return v;
      }
    }
    return nullptr;
  }
};

/// Parses "a b c" (or "a, b, c") into a fixed number of doubles.
inline std::vector<double> parse_doubles(std::string_view s, std::size_t expected,
                                         std::string_view what) {
  std::string tmp(s);
  for (char& c : tmp) {
    if (c == ',') c = ' ';
  }
  std::vector<double> out;
  for (auto tok : split_ws(tmp)) out.push_back(parse_double(tok, what));
  if (expected != 0 && out.size() != expected) {
    throw ParseError(std::string(what) + ": expected " + std::to_string(expected) +
                     " values, got " + std::to_string(out.size()));
  }
  return out;
}

/// 64-bit FNV-1a, used for config fingerprints and per-frame seeds.
inline std::uint64_t fnv1a(std::string_view bytes,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return s;
}

}  // namespace lidarprior::text

#endif  // LIDARPRIOR_TEXT_HPP
