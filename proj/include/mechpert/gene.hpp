#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mechpert/error.hpp"

namespace mechpert {

/// Uppercase, whitespace-free gene token. Construction normalizes case and
/// rejects empty or whitespace-bearing input.
class GeneSymbol {
 public:
  GeneSymbol() = default;

  explicit GeneSymbol(std::string_view raw) : symbol_(normalize(raw)) {
    if (symbol_.empty()) throw Error(ErrorCode::MalformedRow, "empty gene symbol");
    if (std::any_of(symbol_.begin(), symbol_.end(),
                    [](unsigned char c) { return std::isspace(c) != 0; })) {
      throw Error(ErrorCode::MalformedRow, "gene symbol contains whitespace: '" + symbol_ + "'");
    }
  }

  /// Returns nullopt instead of throwing; used where bad symbols are dropped.
  static std::optional<GeneSymbol> try_parse(std::string_view raw) {
    std::string s = normalize(raw);
    if (s.empty()) return std::nullopt;
    for (unsigned char c : s)
      if (std::isspace(c)) return std::nullopt;
    GeneSymbol g;
    g.symbol_ = std::move(s);
    return g;
  }

  const std::string& str() const noexcept { return symbol_; }
  bool empty() const noexcept { return symbol_.empty(); }

  friend auto operator<=>(const GeneSymbol&, const GeneSymbol&) = default;
  friend bool operator==(const GeneSymbol&, const GeneSymbol&) = default;

 private:
  static std::string normalize(std::string_view raw) {
    auto b = raw.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = raw.find_last_not_of(" \t\r\n");
    std::string s(raw.substr(b, e - b + 1));
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
  }

  std::string symbol_;
};

using GeneSet = std::set<GeneSymbol>;
using GeneList = std::vector<GeneSymbol>;

inline GeneList genes(std::initializer_list<std::string_view> raw) {
  GeneList out;
  for (auto r : raw) out.emplace_back(r);
  return out;
}

inline GeneSet to_set(const GeneList& list) { return GeneSet(list.begin(), list.end()); }

inline std::vector<std::string> to_strings(const GeneList& list) {
  std::vector<std::string> out;
  out.reserve(list.size());
  for (const auto& g : list) out.push_back(g.str());
  return out;
}

/// Ranks `scored` by descending score, breaking ties by ascending symbol, and
/// truncates to `k` entries.
template <typename Score>
GeneList rank_descending(const std::map<GeneSymbol, Score>& scored, std::size_t k) {
  std::vector<std::pair<GeneSymbol, Score>> items(scored.begin(), scored.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  GeneList out;
  for (std::size_t i = 0; i < items.size() && i < k; ++i) out.push_back(items[i].first);
  return out;
}

}  // namespace mechpert

template <>
struct std::hash<mechpert::GeneSymbol> {
  std::size_t operator()(const mechpert::GeneSymbol& g) const noexcept {
    return std::hash<std::string>{}(g.str());
  }
};
