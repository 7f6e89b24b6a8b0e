#pragma once

// Runtime configuration. Every default lives here.

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gistgraph/corpus.hpp"
#include "gistgraph/diffusion.hpp"
#include "gistgraph/error.hpp"
#include "gistgraph/eval.hpp"
#include "gistgraph/rerank.hpp"

namespace gistgraph {

struct ProviderConfig {
  std::string mode = "mock";  // mock | http
  std::string endpoint;       // full chat-completions URL
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  std::size_t max_concurrency = 8;
  int timeout_seconds = 120;
  int retries = 2;  // transport-level retries, on top of the first attempt
};

struct EmbedderConfig {
  std::string mode = "mock";  // mock | http
  std::size_t dimension = 256;
  bool bigrams = true;        // mock only
  bool drop_stopwords = true; // mock only
  std::string endpoint;       // full embeddings URL
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  std::string query_instruction;  // prepended to query texts (http only)
  std::size_t batch_size = 64;
  std::size_t max_concurrency = 4;
  int timeout_seconds = 120;
  int retries = 2;
};

struct Config {
  std::string corpus;
  bool pre_chunked = false;
  std::size_t max_tokens = kDefaultMaxTokens;
  std::string index_dir = "index";
  std::string output_dir = "out";

  ProviderConfig provider;
  EmbedderConfig embedder;

  DiffusionParams diffusion;            // alpha = 2.0, beta = 1.0 from the reward sweeps
  double epsilon = kDefaultEpsilon;
  double delta = kDefaultDelta;
  std::size_t k_final = 5;
  int m_split = 2;                      // sub-questions per split query
  std::size_t n_dense = 200;

  std::vector<std::size_t> recall_ks{2, 5, 10};
  std::string recall_mode = "fraction";  // fraction | hit
  bool generate_answers = true;
  std::size_t eval_workers = 4;

  eval::RecallMode recall_mode_enum() const {
    return recall_mode == "hit" ? eval::RecallMode::hit : eval::RecallMode::fraction;
  }

  void validate() const {
    auto bad = [](const std::string& msg) { throw ParseError("config: " + msg); };
    diffusion.validate();
    if (max_tokens < kMinMaxTokens) bad("max_tokens must be >= " + std::to_string(kMinMaxTokens));
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) bad("epsilon must lie in [0, 1]");
    if (!(delta > 0.0)) bad("delta must be > 0");
    if (k_final == 0) bad("k_final must be >= 1");
    if (m_split < 2) bad("m_split must be >= 2");
    if (n_dense < k_final) bad("n_dense must be >= k_final");
    if (recall_ks.empty()) bad("recall_ks must not be empty");
    for (auto k : recall_ks)
      if (k == 0) bad("recall_ks entries must be >= 1");
    if (recall_mode != "fraction" && recall_mode != "hit") bad("recall_mode must be 'fraction' or 'hit'");
    if (eval_workers == 0) bad("eval_workers must be >= 1");
    if (provider.mode != "mock" && provider.mode != "http") bad("provider.mode must be 'mock' or 'http'");
    if (provider.mode == "http" && (provider.endpoint.empty() || provider.model.empty()))
      bad("provider.mode=http requires provider.endpoint and provider.model");
    if (provider.max_concurrency == 0) bad("provider.max_concurrency must be >= 1");
    if (embedder.mode != "mock" && embedder.mode != "http") bad("embedder.mode must be 'mock' or 'http'");
    if (embedder.mode == "http" && (embedder.endpoint.empty() || embedder.model.empty()))
      bad("embedder.mode=http requires embedder.endpoint and embedder.model");
    if (embedder.dimension == 0) bad("embedder.dimension must be >= 1");
    if (embedder.batch_size == 0 || embedder.max_concurrency == 0)
      bad("embedder.batch_size and embedder.max_concurrency must be >= 1");
  }
};

namespace detail {

class ConfigReader {
 public:
  ConfigReader(const nlohmann::json& j, std::string scope) : j_(j), scope_(std::move(scope)) {
    if (!j_.is_object()) throw ParseError("config: '" + scope_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("config: " + path(key) + ": " + e.what());
    }
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void reject_unknown() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) throw ParseError("config: unknown key " + path(k.c_str()));
  }

 private:
  std::string path(const char* key) const { return scope_.empty() ? std::string(key) : scope_ + "." + key; }

  const nlohmann::json& j_;
  std::string scope_;
  std::set<std::string> seen_;
};

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
  if (p.empty() || base.empty()) return p;
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

}  // namespace detail

/// Builds a Config from JSON. Relative paths are resolved against `base_dir`.
inline Config config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  Config c;
  detail::ConfigReader r(j, "");
  r.get("corpus", c.corpus);
  r.get("pre_chunked", c.pre_chunked);
  r.get("max_tokens", c.max_tokens);
  r.get("index_dir", c.index_dir);
  r.get("output_dir", c.output_dir);
  if (const auto* p = r.child("provider")) {
    detail::ConfigReader pr(*p, "provider");
    pr.get("mode", c.provider.mode);
    pr.get("endpoint", c.provider.endpoint);
    pr.get("model", c.provider.model);
    pr.get("api_key_env", c.provider.api_key_env);
    pr.get("max_concurrency", c.provider.max_concurrency);
    pr.get("timeout_seconds", c.provider.timeout_seconds);
    pr.get("retries", c.provider.retries);
    pr.reject_unknown();
  }
  if (const auto* e = r.child("embedder")) {
    detail::ConfigReader er(*e, "embedder");
    er.get("mode", c.embedder.mode);
    er.get("dimension", c.embedder.dimension);
    er.get("bigrams", c.embedder.bigrams);
    er.get("drop_stopwords", c.embedder.drop_stopwords);
    er.get("endpoint", c.embedder.endpoint);
    er.get("model", c.embedder.model);
    er.get("api_key_env", c.embedder.api_key_env);
    er.get("query_instruction", c.embedder.query_instruction);
    er.get("batch_size", c.embedder.batch_size);
    er.get("max_concurrency", c.embedder.max_concurrency);
    er.get("timeout_seconds", c.embedder.timeout_seconds);
    er.get("retries", c.embedder.retries);
    er.reject_unknown();
  }
  if (const auto* d = r.child("diffusion")) {
    detail::ConfigReader dr(*d, "diffusion");
    dr.get("top_k_facts", c.diffusion.top_k_facts);
    dr.get("alpha", c.diffusion.alpha);
    dr.get("beta", c.diffusion.beta);
    dr.get("gamma", c.diffusion.gamma);
    dr.get("tol", c.diffusion.tol);
    dr.get("max_iters", c.diffusion.max_iters);
    dr.reject_unknown();
  }
  r.get("epsilon", c.epsilon);
  r.get("delta", c.delta);
  r.get("k_final", c.k_final);
  r.get("m_split", c.m_split);
  r.get("n_dense", c.n_dense);
  r.get("recall_ks", c.recall_ks);
  r.get("recall_mode", c.recall_mode);
  r.get("generate_answers", c.generate_answers);
  r.get("eval_workers", c.eval_workers);
  r.reject_unknown();

  c.corpus = detail::resolve_path(c.corpus, base_dir);
  c.index_dir = detail::resolve_path(c.index_dir, base_dir);
  c.output_dir = detail::resolve_path(c.output_dir, base_dir);
  c.validate();
  return c;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j, std::filesystem::path(path).parent_path());
}

}  // namespace gistgraph
