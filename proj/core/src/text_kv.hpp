#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "csparts/errors.hpp"

namespace csparts::detail {

// "key value" metadata files with a fixed first line naming format and version.
struct KvFile {
  std::map<std::string, std::string, std::less<>> values;

  const std::string& at(std::string_view key, const std::filesystem::path& path) const {
    auto it = values.find(key);
    if (it == values.end()) throw FormatError("missing field '" + std::string(key) + "' in '" + path.string() + "'");
    return it->second;
  }

  std::size_t size_at(std::string_view key, const std::filesystem::path& path) const {
    const auto& s = at(key, path);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw FormatError("field '" + std::string(key) + "' is not an unsigned integer in '" + path.string() + "'");
    return v;
  }

  double double_at(std::string_view key, const std::filesystem::path& path) const {
    const auto& s = at(key, path);
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw FormatError("field '" + std::string(key) + "' is not a number in '" + path.string() + "'");
  }
};

inline KvFile read_kv(const std::filesystem::path& path, std::string_view expected_header) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != expected_header)
    throw FormatError("bad header in '" + path.string() + "' (expected '" + std::string(expected_header) + "')");
  KvFile kv;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw FormatError("malformed line '" + line + "' in '" + path.string() + "'");
    kv.values.emplace(line.substr(0, sp), line.substr(sp + 1));
  }
  return kv;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

// Round-trippable decimal form of a double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::filesystem::path with_suffix(const std::filesystem::path& stem, std::string_view suffix) {
  return std::filesystem::path(stem.string() + std::string(suffix));
}

}  // namespace csparts::detail
