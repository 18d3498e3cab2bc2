#pragma once

#include <cstdlib>
#include <regex>
#include <string>

#include <httplib.h>

#include "mechpert/hypothesis.hpp"

namespace mechpert {

enum class HttpBodyStyle { Prompt, Messages };

/// Request/response shape of a generic JSON completion endpoint.
struct HttpProviderSettings {
  std::string url;  // e.g. https://host:443/v1/chat/completions
  std::string model = "default";
  HttpBodyStyle style = HttpBodyStyle::Messages;
  std::string model_field = "model";
  std::string prompt_field = "prompt";
  std::string messages_field = "messages";
  std::string system_field = "system";  // prompt style only
  std::string temperature_field = "temperature";
  std::string response_pointer = "/choices/0/message/content";
  std::string api_key_env = "MECHPERT_API_KEY";
  int timeout_seconds = 120;
};

inline HttpBodyStyle parse_body_style(std::string_view s) {
  if (s == "prompt") return HttpBodyStyle::Prompt;
  if (s == "messages") return HttpBodyStyle::Messages;
  throw Error(ErrorCode::InvalidConfig, "unknown http body style '" + std::string(s) + "'");
}

inline std::string to_string(HttpBodyStyle s) { return s == HttpBodyStyle::Prompt ? "prompt" : "messages"; }

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};

inline ParsedUrl split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw Error(ErrorCode::InvalidConfig, "bad provider url '" + url + "'");
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

inline json build_http_body(const HttpProviderSettings& s, const ProviderRequest& r) {
  json body;
  body[s.model_field] = r.model_id.empty() ? s.model : r.model_id;
  body[s.temperature_field] = r.temperature;
  if (s.style == HttpBodyStyle::Messages) {
    json messages = json::array();
    if (!r.system.empty()) messages.push_back({{"role", "system"}, {"content", r.system}});
    messages.push_back({{"role", "user"}, {"content", r.prompt}});
    body[s.messages_field] = messages;
  } else {
    if (!r.system.empty()) body[s.system_field] = r.system;
    body[s.prompt_field] = r.prompt;
  }
  return body;
}

/// Pulls the completion text out of a response body. Non-JSON bodies and
/// missing paths are transport errors; the text itself is parsed later.
inline std::string extract_http_text(const HttpProviderSettings& s, std::string_view body) {
  auto j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ProviderTransport, "response body is not JSON");
  json::json_pointer ptr;
  try {
    ptr = json::json_pointer(s.response_pointer);
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidConfig, "bad response pointer '" + s.response_pointer + "'");
  }
  if (!j.contains(ptr)) throw Error(ErrorCode::ProviderTransport, "response has no " + s.response_pointer);
  const auto& v = j.at(ptr);
  return v.is_string() ? v.get<std::string>() : v.dump();
}

class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpProviderSettings settings) : s_(std::move(settings)), url_(split_url(s_.url)) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (url_.scheme_host_port.rfind("https://", 0) == 0)
      throw Error(ErrorCode::InvalidConfig, "built without TLS support; cannot reach " + s_.url);
#endif
  }

  std::string complete(const ProviderRequest& r) const override {
    httplib::Client client(url_.scheme_host_port);
    client.set_connection_timeout(s_.timeout_seconds);
    client.set_read_timeout(s_.timeout_seconds);
    httplib::Headers headers;
    if (const char* key = std::getenv(s_.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
    auto res = client.Post(url_.path, headers, build_http_body(s_, r).dump(), "application/json");
    if (!res) throw Error(ErrorCode::ProviderTransport, "POST " + s_.url + ": " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
      throw Error(ErrorCode::ProviderTransport, "POST " + s_.url + ": HTTP " + std::to_string(res->status));
    return extract_http_text(s_, res->body);
  }

  std::string id() const override { return "http(" + s_.url + ", " + s_.model + ")"; }

 private:
  HttpProviderSettings s_;
  ParsedUrl url_;
};

}  // namespace mechpert
