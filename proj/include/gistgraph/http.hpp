#pragma once

// Network-backed providers speaking the common chat-completions and embeddings
// JSON wire formats. Kept out of the umbrella header so that offline users do
// not pull in cpp-httplib or OpenSSL.

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "gistgraph/config.hpp"
#include "gistgraph/embedding.hpp"
#include "gistgraph/error.hpp"
#include "gistgraph/provider.hpp"

namespace gistgraph {

struct HttpSettings {
  std::string url;  // e.g. https://api.openai.com/v1/chat/completions
  std::string model;
  std::string api_key;  // may be empty for local servers
  int timeout_seconds = 120;
  int retries = 2;
};

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw InvalidArgument("endpoint '" + url + "' has no scheme");
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

inline std::string api_key_from_env(const std::string& var) {
  if (var.empty()) return {};
  const char* v = std::getenv(var.c_str());
  return v ? std::string(v) : std::string();
}

// POSTs JSON with bounded retries on transport errors, 429 and 5xx.
inline nlohmann::json post_json(const HttpSettings& s, const nlohmann::json& body) {
  net::check_access(s.url);
  const auto [origin, path] = split_url(s.url);
  httplib::Headers headers;
  if (!s.api_key.empty()) headers.emplace("Authorization", "Bearer " + s.api_key);
  const auto payload = body.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= s.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(250 * (1 << std::min(attempt, 5))));
    httplib::Client client(origin);
    client.set_connection_timeout(s.timeout_seconds, 0);
    client.set_read_timeout(s.timeout_seconds, 0);
    client.set_write_timeout(s.timeout_seconds, 0);
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw ProviderError(s.url + ": HTTP " + std::to_string(res->status), res->body);
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) throw ProviderError(s.url + ": response is not JSON", res->body);
    return j;
  }
  throw ProviderError(s.url + ": giving up after " + std::to_string(s.retries + 1) + " attempts (" + last_error + ")");
}

}  // namespace detail

/// Chat-completions client: `{"model", "messages": [system, user]}` -> choices[0].message.content.
class HttpChatProvider final : public ChatProvider {
 public:
  explicit HttpChatProvider(HttpSettings settings) : s_(std::move(settings)) {}

  std::string complete(const ChatRequest& req) const override {
    const nlohmann::json body{{"model", s_.model},
                              {"temperature", 0},
                              {"messages",
                               {{{"role", "system"}, {"content", req.system}},
                                {{"role", "user"}, {"content", req.user}}}}};
    const auto j = detail::post_json(s_, body);
    try {
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw ProviderError(s_.url + ": response has no choices[0].message.content", j.dump());
    }
  }

 private:
  HttpSettings s_;
};

/// Embeddings client: `{"model", "input": [...]}` -> data[i].embedding (ordered by `index` when present).
class HttpEmbedder final : public Embedder {
 public:
  HttpEmbedder(HttpSettings settings, std::size_t dimension, std::string query_instruction = {})
      : s_(std::move(settings)), dim_(dimension), query_instruction_(std::move(query_instruction)) {}

  std::size_t dimension() const override { return dim_; }

  std::vector<Embedding> embed_batch(const std::vector<std::string>& texts, EmbedKind kind) const override {
    nlohmann::json input = nlohmann::json::array();
    for (const auto& t : texts) input.push_back(kind == EmbedKind::query ? query_instruction_ + t : t);
    const auto j = detail::post_json(s_, {{"model", s_.model}, {"input", input}});
    std::vector<Embedding> out(texts.size());
    try {
      const auto& data = j.at("data");
      if (data.size() != texts.size()) throw ProviderError(s_.url + ": wrong number of embeddings", j.dump());
      for (std::size_t i = 0; i < data.size(); ++i) {
        const auto idx = data[i].contains("index") ? data[i]["index"].get<std::size_t>() : i;
        if (idx >= out.size()) throw ProviderError(s_.url + ": embedding index out of range", j.dump());
        out[idx] = data[i].at("embedding").get<Embedding>();
        if (out[idx].size() != dim_)
          throw ProviderError(s_.url + ": embedding has dimension " + std::to_string(out[idx].size()) +
                              ", configured " + std::to_string(dim_));
      }
    } catch (const nlohmann::json::exception&) {
      throw ProviderError(s_.url + ": malformed embeddings response", j.dump());
    }
    return out;
  }

 private:
  HttpSettings s_;
  std::size_t dim_;
  std::string query_instruction_;
};

inline HttpSettings chat_settings(const ProviderConfig& c) {
  return {c.endpoint, c.model, detail::api_key_from_env(c.api_key_env), c.timeout_seconds, c.retries};
}

inline HttpSettings embedding_settings(const EmbedderConfig& c) {
  return {c.endpoint, c.model, detail::api_key_from_env(c.api_key_env), c.timeout_seconds, c.retries};
}

}  // namespace gistgraph
