#pragma once

// Builds the user messages that accompany each system prompt, and the inverse
// helpers the mock provider uses to read them back.

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "gistgraph/prompt_templates.hpp"

namespace gistgraph::prompts {

inline constexpr std::string_view kPassageHeader = "Passage:\n";
inline constexpr std::string_view kParagraphHeader = "Paragraph:\n";
inline constexpr std::string_view kEntitiesHeader = "\n\nNamed entities: ";
inline constexpr std::string_view kQuestionHeader = "Question: ";
inline constexpr std::string_view kEvidenceHeader = "Evidence:\n";
inline constexpr std::string_view kAnswerTrailer = "\nAnswer:";

/// Renders the decomposition template the way Python's str.format would.
inline std::string query_decomposition_prompt(int max_splits) {
  constexpr std::string_view placeholder = "{max_splits}";
  const std::string_view tpl = kQueryDecompositionTemplate;
  std::string out;
  out.reserve(tpl.size());
  for (std::size_t i = 0; i < tpl.size();) {
    if (tpl.substr(i, placeholder.size()) == placeholder) {
      out += std::to_string(max_splits);
      i += placeholder.size();
    } else if (tpl.substr(i, 2) == "{{") {
      out += '{';
      i += 2;
    } else if (tpl.substr(i, 2) == "}}") {
      out += '}';
      i += 2;
    } else {
      out += tpl[i++];
    }
  }
  return out;
}

inline std::string memory_user_message(std::string_view passage_text) {
  return std::string(kPassageHeader) + std::string(passage_text);
}

inline std::string ner_user_message(std::string_view memory_text) {
  return std::string(kParagraphHeader) + std::string(memory_text);
}

inline std::string triple_user_message(std::string_view memory_text, const nlohmann::json& entity_list) {
  return std::string(kParagraphHeader) + std::string(memory_text) + std::string(kEntitiesHeader) +
         entity_list.dump();
}

inline std::string decomposition_user_message(std::string_view question) {
  return std::string(kQuestionHeader) + std::string(question);
}

struct EvidenceText {
  std::string_view passage;
  std::string_view memory;
};

template <typename Range>
std::string answer_user_message(std::string_view question, const Range& evidence) {
  std::string out(kEvidenceHeader);
  std::size_t i = 0;
  for (const EvidenceText& e : evidence) {
    out += "[" + std::to_string(++i) + "] Passage: ";
    out += e.passage;
    out += "\n    Memory: ";
    out += e.memory;
    out += "\n";
  }
  out += "\n";
  out += kQuestionHeader;
  out += question;
  out += kAnswerTrailer;
  return out;
}

/// Returns everything after `header` (up to `stop`, if present).
inline std::string_view body_after(std::string_view message, std::string_view header,
                                   std::string_view stop = {}) {
  const auto pos = message.find(header);
  if (pos == std::string_view::npos) return {};
  auto body = message.substr(pos + header.size());
  if (!stop.empty()) {
    const auto end = body.find(stop);
    if (end != std::string_view::npos) body = body.substr(0, end);
  }
  return body;
}

}  // namespace gistgraph::prompts
