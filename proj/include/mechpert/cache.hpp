#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <openssl/evp.h>

#include "mechpert/hypothesis.hpp"
#include "mechpert/tsv.hpp"

namespace mechpert {

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

/// Canonical request identity: (model_id, prompt, temperature, chain_index).
/// Retries (attempt > 0) get their own key so a fresh sample can be stored.
inline json cache_key_material(const ProviderRequest& r) {
  json j = {{"model_id", r.model_id},
            {"system", r.system},
            {"prompt", r.prompt},
            {"temperature", r.temperature},
            {"chain_index", r.chain_index}};
  if (r.attempt > 0) j["attempt"] = r.attempt;
  return j;
}

inline std::string cache_key(const ProviderRequest& r) { return sha256_hex(cache_key_material(r).dump()); }

/// Content-addressed response store: `<dir>/<hex key>.json`.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const noexcept { return dir_; }

  std::filesystem::path path_for(const std::string& key) const { return dir_ / (key + ".json"); }

  /// Exact-match lookup. Corrupt entries are reported and treated as misses.
  std::optional<std::string> lookup(const std::string& key) const {
    const auto path = path_for(key);
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
    try {
      const json entry = json::parse(tsv::read_all(path));
      if (!entry.is_object() || !entry.contains("response") || !entry["response"].is_string())
        throw Error(ErrorCode::CacheCorrupt, path.string());
      return entry["response"].get<std::string>();
    } catch (const std::exception& e) {
      log::warn("CacheCorrupt: " + path.string() + " (" + e.what() + "), treating as miss");
      return std::nullopt;
    }
  }

  void store(const std::string& key, const ProviderRequest& request, const std::string& response) const {
    json entry = {{"request", cache_key_material(request)},
                  {"response", response},
                  {"timestamp", std::chrono::duration_cast<std::chrono::seconds>(
                                    std::chrono::system_clock::now().time_since_epoch())
                                    .count()}};
    tsv::write_atomic(path_for(key), entry.dump(2));
  }

 private:
  std::filesystem::path dir_;
};

/// Replays cached responses; on a miss, forwards to `inner` and records the
/// answer. Without an inner provider a miss is a transport failure.
class CachingProvider : public Provider {
 public:
  CachingProvider(std::filesystem::path dir, std::shared_ptr<const Provider> inner = nullptr)
      : cache_(std::move(dir)), inner_(std::move(inner)) {}

  std::string complete(const ProviderRequest& request) const override {
    const auto key = cache_key(request);
    if (auto hit = cache_.lookup(key)) return *hit;
    if (!inner_) throw Error(ErrorCode::ProviderTransport, "cache miss in replay mode: " + key);
    auto response = inner_->complete(request);
    cache_.store(key, request, response);
    return response;
  }

  std::string id() const override { return "cache(" + (inner_ ? inner_->id() : std::string("replay")) + ")"; }

  const ResponseCache& cache() const noexcept { return cache_; }

 private:
  ResponseCache cache_;
  std::shared_ptr<const Provider> inner_;
};

}  // namespace mechpert
