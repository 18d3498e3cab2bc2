#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mechpert/error.hpp"
#include "mechpert/active_design.hpp"
#include "mechpert/hypothesis.hpp"
#include "mechpert/predictor.hpp"

namespace mechpert {

/// Everything a command needs. Flat so that every key has a same-named
/// command-line flag (underscores become hyphens).
struct RunConfig {
  // inputs
  std::string dataset_path;
  std::string cell_line;
  std::string ppi_path;
  int min_score = 700;
  bool restrict_graph = false;  // induce the interactome on measured genes
  std::string euclidean_path;
  std::string poincare_path;
  int euclidean_dim = 0;  // 0 = infer from file
  int poincare_dim = 0;

  // provider
  std::string provider = "synthetic";  // http | cache | synthetic
  std::uint64_t synthetic_seed = 0;
  std::string grn_path;
  std::string cache_dir;
  std::string cache_backend = "replay";  // replay | http | synthetic
  std::string http_url;
  std::string http_style = "messages";
  std::string http_model_field = "model";
  std::string http_prompt_field = "prompt";
  std::string http_messages_field = "messages";
  std::string http_system_field = "system";
  std::string http_temperature_field = "temperature";
  std::string http_response_pointer = "/choices/0/message/content";
  std::string api_key_env = "MECHPERT_API_KEY";
  int http_timeout = 120;
  std::string model_id = "default";

  // prediction
  std::string strategy = "confidence";
  std::vector<std::string> strategies{"semantic", "binary", "confidence"};
  int k_chains = 3;
  double temperature = 0.7;
  std::string k_range = "5";
  std::string context;  // defaults to cell_line
  double alpha = 0.85;
  double beta = 1.0;
  std::string laplacian = "normalized";
  int top_reachable = 50;
  double pct_harmonizer = 20.0;
  double pct_spectral = 15.0;
  int min_votes = 1;
  std::vector<std::string> targets;

  // evaluation
  std::vector<int> sizes{50, 100, 200, 500, 800};
  std::vector<std::uint64_t> seeds{0};
  std::uint64_t seed = 0;
  int max_targets = 100;
  int metric_top_k = 20;

  // anchors
  std::string anchor_strategy = "consensus";
  int budget = 50;
  int batch = 10;
  int pool_sample = 400;
  std::string anchors_path;
  bool map_targets = false;

  std::string output_dir = "mechpert_out";
  std::string log_level = "warn";
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    RunConfig, dataset_path, cell_line, ppi_path, min_score, restrict_graph, euclidean_path, poincare_path,
    euclidean_dim, poincare_dim, provider, synthetic_seed, grn_path, cache_dir, cache_backend, http_url, http_style,
    http_model_field, http_prompt_field, http_messages_field, http_system_field, http_temperature_field,
    http_response_pointer, api_key_env, http_timeout, model_id, strategy, strategies, k_chains, temperature, k_range,
    context, alpha, beta, laplacian, top_reachable, pct_harmonizer, pct_spectral, min_votes, targets, sizes, seeds,
    seed, max_targets, metric_top_k, anchor_strategy, budget, batch, pool_sample, anchors_path, map_targets,
    output_dir, log_level)

inline std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

/// Range checks that do not need the input files.
inline void validate(const RunConfig& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
  if (c.provider != "http" && c.provider != "cache" && c.provider != "synthetic")
    fail("provider must be http, cache or synthetic");
  if (c.cache_backend != "replay" && c.cache_backend != "http" && c.cache_backend != "synthetic")
    fail("cache_backend must be replay, http or synthetic");
  if (c.http_style != "prompt" && c.http_style != "messages") fail("http_style must be prompt or messages");
  if (c.laplacian != "normalized" && c.laplacian != "unnormalized") fail("laplacian must be normalized or unnormalized");
  if (c.min_score < 0 || c.min_score > 1000) fail("min_score must lie in [0, 1000]");
  if (c.k_chains < 1) fail("k_chains must be >= 1");
  if (!(c.temperature >= 0.0)) fail("temperature must be >= 0");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) fail("alpha must lie in (0, 1)");
  if (!(c.beta > 0.0)) fail("beta must be > 0");
  if (c.top_reachable < 1) fail("top_reachable must be >= 1");
  if (!(c.pct_harmonizer > 0.0 && c.pct_harmonizer < 100.0)) fail("pct_harmonizer must lie in (0, 100)");
  if (!(c.pct_spectral > 0.0 && c.pct_spectral < 100.0)) fail("pct_spectral must lie in (0, 100)");
  if (c.min_votes < 1) fail("min_votes must be >= 1");
  if (c.max_targets < 0) fail("max_targets must be >= 0");
  if (c.metric_top_k < 2) fail("metric_top_k must be >= 2");
  if (c.budget < 1) fail("budget must be >= 1");
  if (c.batch < 1) fail("batch must be >= 1");
  if (c.pool_sample < 1) fail("pool_sample must be >= 1");
  if (c.http_timeout < 1) fail("http_timeout must be >= 1");
  for (int n : c.sizes)
    if (n < 1) fail("sizes must be positive");
  if (c.euclidean_dim < 0 || c.poincare_dim < 0) fail("embedding dims must be >= 0");
  parse_strategy(c.strategy);
  for (const auto& s : c.strategies) parse_strategy(s);
  if (c.anchor_strategy != "all") parse_anchor_strategy(c.anchor_strategy);
  if (c.log_level != "debug" && c.log_level != "info" && c.log_level != "warn" && c.log_level != "quiet")
    fail("log_level must be debug, info, warn or quiet");
}

/// Each non-empty path must exist.
inline void validate_paths(const RunConfig& c) {
  const std::pair<const char*, const std::string*> paths[] = {
      {"dataset_path", &c.dataset_path}, {"ppi_path", &c.ppi_path},   {"euclidean_path", &c.euclidean_path},
      {"poincare_path", &c.poincare_path}, {"grn_path", &c.grn_path}, {"anchors_path", &c.anchors_path}};
  for (const auto& [key, value] : paths)
    if (!value->empty() && !std::filesystem::exists(*value))
      throw Error(ErrorCode::InvalidConfig, std::string(key) + " does not exist: " + *value);
}

/// Overlays `patch` on the defaults, rejecting unknown keys and wrong types.
inline RunConfig config_from_json(const json& patch) {
  if (!patch.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  const json defaults = RunConfig{};
  for (const auto& [key, _] : patch.items())
    if (!defaults.contains(key)) throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
  json merged = defaults;
  merged.update(patch);
  try {
    return merged.get<RunConfig>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
}

inline json load_config_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config " + path.string());
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::InvalidConfig, "config is not valid JSON: " + path.string());
  return j;
}

/// Converts a command-line string to the JSON type of the default value for
/// `key`. Lists are comma separated.
inline json coerce_flag(const std::string& key, const std::string& text) {
  const json defaults = RunConfig{};
  const json& like = defaults.at(key);
  auto scalar = [&](const json& proto, const std::string& s) -> json {
    try {
      if (proto.is_boolean()) {
        if (s == "true" || s == "1") return true;
        if (s == "false" || s == "0") return false;
        throw Error(ErrorCode::InvalidConfig, "--" + flag_name(key) + " expects true/false");
      }
      if (proto.is_number_unsigned()) {
        if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
        std::size_t used = 0;
        auto v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
      }
      if (proto.is_number_integer()) {
        std::size_t used = 0;
        auto v = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
      }
      if (proto.is_number_float()) {
        std::size_t used = 0;
        auto v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::InvalidConfig, "--" + flag_name(key) + ": cannot parse '" + s + "'");
    }
    return s;
  };
  if (!like.is_array()) return scalar(like, text);
  json proto = key == "seeds" ? json(std::uint64_t{0}) : key == "sizes" ? json(0) : json("");
  json out = json::array();
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto comma = text.find(',', start);
    out.push_back(scalar(proto, text.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Canonical snapshot: every key, sorted, two-space indent, trailing newline.
inline std::string config_snapshot(const RunConfig& c) { return json(c).dump(2) + "\n"; }

}  // namespace mechpert
