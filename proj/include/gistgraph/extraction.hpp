#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gistgraph/corpus.hpp"
#include "gistgraph/error.hpp"
#include "gistgraph/log.hpp"
#include "gistgraph/prompts.hpp"
#include "gistgraph/provider.hpp"
#include "gistgraph/text.hpp"

namespace gistgraph {

/// LLM-distilled gist of exactly one passage. Only `memory_text` feeds the graph.
struct MemoryRecord {
  std::string memory_id;
  std::string passage_id;
  std::string think_text;
  std::string memory_text;

  friend bool operator==(const MemoryRecord&, const MemoryRecord&) = default;
};

struct EntityMention {
  std::string surface;
  std::string canonical;

  friend bool operator==(const EntityMention&, const EntityMention&) = default;
};

struct Triple {
  std::string head;
  std::string relation;
  std::string tail;
  std::string memory_id;

  friend bool operator==(const Triple&, const Triple&) = default;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct DecompositionResult {
  bool split = false;
  std::vector<std::string> sub_questions;
};

/// (passage, memory) pair handed to the answer generator.
struct EvidencePair {
  Passage passage;
  MemoryRecord memory;
};

inline std::string memory_id_for(std::string_view passage_id) { return "mem:" + std::string(passage_id); }

inline EntityMention make_mention(std::string_view surface) {
  return EntityMention{text::collapse_whitespace(surface), text::canonicalize(surface)};
}

namespace detail {

// Finds <tag>...</tag>; returns nullopt when either delimiter is missing.
inline std::optional<std::string> tagged_region(std::string_view raw, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const auto b = raw.find(open);
  if (b == std::string_view::npos) return std::nullopt;
  const auto e = raw.find(close, b + open.size());
  if (e == std::string_view::npos) return std::nullopt;
  return std::string(text::trim(raw.substr(b + open.size(), e - b - open.size())));
}

// Models often wrap JSON in markdown fences despite instructions.
inline std::string_view strip_code_fence(std::string_view raw) {
  raw = text::trim(raw);
  if (raw.substr(0, 3) != "```") return raw;
  const auto nl = raw.find('\n');
  if (nl == std::string_view::npos) return raw;
  raw.remove_prefix(nl + 1);
  const auto end = raw.rfind("```");
  if (end != std::string_view::npos) raw = raw.substr(0, end);
  return text::trim(raw);
}

inline std::optional<nlohmann::json> parse_json(std::string_view raw) {
  auto j = nlohmann::json::parse(strip_code_fence(raw), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

}  // namespace detail

/// Parses a memory-writing response into (think, memory); nullopt if unusable.
inline std::optional<std::pair<std::string, std::string>> parse_memory_response(std::string_view raw) {
  auto think = detail::tagged_region(raw, "think");
  auto memory = detail::tagged_region(raw, "memory");
  if (!think || !memory || memory->empty()) return std::nullopt;
  return std::pair{std::move(*think), std::move(*memory)};
}

/// Accepts `["a", "b"]` or `{"named_entities": [...]}`; nullopt if neither.
inline std::optional<std::vector<std::string>> parse_entity_response(std::string_view raw) {
  auto j = detail::parse_json(raw);
  if (!j) return std::nullopt;
  if (j->is_object() && j->contains("named_entities")) j = (*j)["named_entities"];
  if (!j->is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& item : *j) {
    if (item.is_string()) out.push_back(item.get<std::string>());
    else if (item.is_number()) out.push_back(item.dump());
    else return std::nullopt;
  }
  return out;
}

/// Accepts `[[h, r, t], ...]` or `{"triples": [...]}`. Items of the wrong arity are skipped.
inline std::optional<std::vector<std::array<std::string, 3>>> parse_triple_response(std::string_view raw) {
  auto j = detail::parse_json(raw);
  if (!j) return std::nullopt;
  if (j->is_object() && j->contains("triples")) j = (*j)["triples"];
  if (!j->is_array()) return std::nullopt;
  std::vector<std::array<std::string, 3>> out;
  for (const auto& item : *j) {
    if (!item.is_array() || item.size() != 3) continue;
    std::array<std::string, 3> t;
    bool ok = true;
    for (std::size_t k = 0; k < 3; ++k) {
      if (item[k].is_string()) t[k] = item[k].get<std::string>();
      else if (item[k].is_number()) t[k] = item[k].dump();
      else ok = false;
    }
    if (ok) out.push_back(std::move(t));
  }
  return out;
}

/// Enforces the DecompositionResult invariants on whatever the provider produced.
inline DecompositionResult sanitize_decomposition(bool split, std::vector<std::string> subs, int max_splits) {
  DecompositionResult r;
  if (!split) return r;
  std::set<std::string> seen;
  for (auto& s : subs) {
    auto t = text::collapse_whitespace(s);
    if (t.empty() || !seen.insert(t).second) continue;
    if (static_cast<int>(r.sub_questions.size()) == max_splits) break;
    r.sub_questions.push_back(std::move(t));
  }
  r.split = r.sub_questions.size() >= 2;
  if (!r.split) r.sub_questions.clear();
  return r;
}

inline std::optional<DecompositionResult> parse_decomposition_response(std::string_view raw, int max_splits) {
  auto j = detail::parse_json(raw);
  if (!j || !j->is_object() || !j->contains("split") || !(*j)["split"].is_boolean()) return std::nullopt;
  std::vector<std::string> subs;
  if (j->contains("sub_questions")) {
    const auto& list = (*j)["sub_questions"];
    if (!list.is_array()) return std::nullopt;
    for (const auto& s : list) {
      if (!s.is_string()) return std::nullopt;
      subs.push_back(s.get<std::string>());
    }
  }
  return sanitize_decomposition((*j)["split"].get<bool>(), std::move(subs), max_splits);
}

struct ExtractionOptions {
  int malformed_retries = 1;
};

/// All LLM-dependent steps, routed through one ChatProvider.
class Extractor {
 public:
  explicit Extractor(const ChatProvider& provider, ExtractionOptions options = {})
      : provider_(provider), options_(options) {}

  MemoryRecord extract_memory(const Passage& passage) const {
    if (text::trim(passage.text).empty())
      throw InvalidArgument("extract_memory: passage '" + passage.passage_id + "' has empty text");
    const ChatRequest req{std::string(prompts::kMemoryPrompt), prompts::memory_user_message(passage.text)};
    std::string raw;
    for (int attempt = 0; attempt <= options_.malformed_retries; ++attempt) {
      raw = provider_.complete(req);
      if (auto parsed = parse_memory_response(raw))
        return MemoryRecord{memory_id_for(passage.passage_id), passage.passage_id, std::move(parsed->first),
                            std::move(parsed->second)};
    }
    throw ProviderError("extract_memory: passage '" + passage.passage_id +
                            "': response lacks a non-empty <think>/<memory> pair",
                        raw);
  }

  std::vector<EntityMention> extract_entities(const MemoryRecord& memory) const {
    if (text::trim(memory.memory_text).empty())
      throw InvalidArgument("extract_entities: memory '" + memory.memory_id + "' is empty");
    const ChatRequest req{std::string(prompts::kNerPrompt), prompts::ner_user_message(memory.memory_text)};
    auto parsed = with_retry(req, [](std::string_view raw) { return parse_entity_response(raw); });
    if (!parsed) {
      log::warn("extract_entities: unparseable output for memory '" + memory.memory_id + "'; using no entities");
      return {};
    }
    std::vector<EntityMention> out;
    std::set<std::string> seen;
    for (const auto& surface : *parsed) {
      auto m = make_mention(surface);
      if (m.canonical.empty() || !seen.insert(m.canonical).second) continue;
      out.push_back(std::move(m));
    }
    return out;
  }

  std::vector<Triple> extract_triples(const MemoryRecord& memory, const std::vector<EntityMention>& entities) const {
    nlohmann::json names = nlohmann::json::array();
    for (const auto& e : entities) names.push_back(e.surface);
    const ChatRequest req{std::string(prompts::kTriplePrompt),
                          prompts::triple_user_message(memory.memory_text, names)};
    auto parsed = with_retry(req, [](std::string_view raw) { return parse_triple_response(raw); });
    if (!parsed) {
      log::warn("extract_triples: unparseable output for memory '" + memory.memory_id + "'; using no triples");
      return {};
    }
    std::vector<Triple> out;
    std::set<std::array<std::string, 3>> seen;
    for (const auto& [h, r, t] : *parsed) {
      Triple tr{text::canonicalize(h), text::collapse_whitespace(r), text::canonicalize(t), memory.memory_id};
      if (tr.head.empty() || tr.tail.empty() || tr.relation.empty()) continue;
      if (!seen.insert({tr.head, tr.relation, tr.tail}).second) continue;
      out.push_back(std::move(tr));
    }
    return out;
  }

  /// Never throws on bad provider output; anything unusable means "no split".
  DecompositionResult decompose_query(std::string_view question, int max_splits = 2) const {
    if (max_splits < 2) throw InvalidArgument("decompose_query: max_splits must be >= 2");
    const ChatRequest req{prompts::query_decomposition_prompt(max_splits),
                          prompts::decomposition_user_message(question)};
    auto parsed = with_retry(req, [&](std::string_view raw) { return parse_decomposition_response(raw, max_splits); });
    return parsed ? std::move(*parsed) : DecompositionResult{};
  }

  std::string generate_answer(std::string_view question, const std::vector<EvidencePair>& evidence) const {
    std::vector<prompts::EvidenceText> items;
    items.reserve(evidence.size());
    for (const auto& e : evidence) items.push_back({e.passage.text, e.memory.memory_text});
    const ChatRequest req{std::string(prompts::kAnswerPrompt), prompts::answer_user_message(question, items)};
    return std::string(text::trim(provider_.complete(req)));
  }

 private:
  template <typename Parse>
  auto with_retry(const ChatRequest& req, Parse&& parse) const -> decltype(parse(std::string_view{})) {
    for (int attempt = 0; attempt <= options_.malformed_retries; ++attempt) {
      const auto raw = provider_.complete(req);
      if (auto parsed = parse(raw)) return parsed;
    }
    return std::nullopt;
  }

  const ChatProvider& provider_;
  ExtractionOptions options_;
};

}  // namespace gistgraph
