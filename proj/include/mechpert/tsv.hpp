#pragma once

#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

#include "mechpert/error.hpp"

namespace mechpert::tsv {

inline std::vector<std::string_view> split(std::string_view line, char sep = '\t') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

/// Parses a decimal number; nullopt when the field is not a number at all.
/// Non-finite spellings (nan, inf) parse successfully and are left to the caller.
inline std::optional<double> parse_double(std::string_view field) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ptr != field.data() + field.size()) return std::nullopt;
  if (ec == std::errc::result_out_of_range) return std::nullopt;
  return value;
}

/// Shortest form guaranteed to round-trip: 17 significant digits.
inline std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, ptr);
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw Error(ErrorCode::MissingFile, path.string());
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  return in;
}

/// Writes to a sibling temp file, then renames over the destination.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  static std::atomic<unsigned long> counter{0};
  auto tmp = path;
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "." +
         std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::MissingFile, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_all(const std::filesystem::path& path) {
  auto in = open_input(path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace mechpert::tsv
