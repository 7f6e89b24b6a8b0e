#pragma once

// Deterministic rule-based stand-in for an LLM. It recognises which task it is
// serving from the system prompt and answers in the same wire format a real
// model is asked for, so the parsing paths are exercised end to end.
//
//   memory        light normalization: whitespace collapsed per line, blank
//                 lines dropped, third-person pronouns replaced by the first
//                 named entity of the passage
//   NER           maximal runs of capitalized or numeric tokens, with lowercase
//                 connectors ("of", "de", ...) allowed between members
//   triples       every line of the form `head | relation | tail`
//   decomposition split on " or " when a comparative keyword is present
//   answer        first [ANS]...[/ANS] span in the evidence

#include <algorithm>
#include <array>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gistgraph/prompts.hpp"
#include "gistgraph/provider.hpp"
#include "gistgraph/text.hpp"

namespace gistgraph {

namespace mock {

inline constexpr std::string_view kAnswerOpen = "[ANS]";
inline constexpr std::string_view kAnswerClose = "[/ANS]";

inline bool is_triple_line(std::string_view line) {
  return std::count(line.begin(), line.end(), '|') == 2;
}

inline std::optional<std::array<std::string, 3>> parse_triple_line(std::string_view line) {
  if (!is_triple_line(line)) return std::nullopt;
  const auto a = line.find('|');
  const auto b = line.find('|', a + 1);
  std::array<std::string, 3> parts{std::string(text::trim(line.substr(0, a))),
                                   std::string(text::trim(line.substr(a + 1, b - a - 1))),
                                   std::string(text::trim(line.substr(b + 1)))};
  for (const auto& p : parts)
    if (p.empty()) return std::nullopt;
  return parts;
}

namespace detail {

inline bool is_leading_trim(char c) { return c == '(' || c == '"' || c == '\'' || c == '`'; }
inline bool is_trailing_trim(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == ')' || c == '"' ||
         c == '\'' || c == '`';
}

struct Token {
  std::string core;     // punctuation- and possessive-stripped
  bool breaks = false;  // run must end after this token
  bool blocked = false; // token can never be part of a run
};

inline Token classify(std::string_view raw) {
  Token t;
  if (raw.find_first_of("[]|<>") != std::string_view::npos) {
    t.blocked = true;
    return t;
  }
  while (!raw.empty() && is_leading_trim(raw.front())) raw.remove_prefix(1);
  while (!raw.empty() && is_trailing_trim(raw.back())) {
    if (raw.back() != '"' && raw.back() != '\'' && raw.back() != '`') t.breaks = true;
    raw.remove_suffix(1);
  }
  for (std::string_view suffix : {"'s", "\xE2\x80\x99s"}) {
    if (raw.size() > suffix.size() && raw.substr(raw.size() - suffix.size()) == suffix) {
      raw.remove_suffix(suffix.size());
      t.breaks = true;
    }
  }
  t.core = std::string(raw);
  return t;
}

inline bool is_member(const std::string& core) {
  if (core.empty()) return false;
  const auto c = static_cast<unsigned char>(core.front());
  return (c >= '0' && c <= '9') || text::starts_with_upper(core);
}

inline bool is_connector(const std::string& core) {
  static const std::set<std::string, std::less<>> k{"of", "de", "da", "del", "della", "di", "du", "des",
                                                     "la", "le", "von", "van", "der", "den", "y"};
  return k.count(core) > 0;
}

// Capitalized function words that never open an entity run.
inline bool is_run_stopword(const std::string& core) {
  static const std::set<std::string, std::less<>> k{
      "The", "A", "An", "In", "On", "At", "He", "She", "It", "They", "His", "Her", "Its", "Their", "This",
      "That", "These", "Those", "Which", "What", "When", "Where", "Who", "Whom", "Whose", "How", "Why",
      "And", "But", "Or", "Of", "For", "To", "By", "With", "From", "After", "Before", "During", "As",
      "Is", "Was", "Are", "Were", "Did", "Does", "Do", "If", "Then", "There", "Both", "Also",
      "I", "We", "You", "My", "Our", "Your"};
  return k.count(core) > 0;
}

}  // namespace detail

/// Surface forms of the capitalized/numeric runs in `text`, in order of first appearance.
inline std::vector<std::string> capitalized_runs(std::string_view body) {
  std::vector<std::string> out;
  std::vector<std::string> run;
  std::vector<std::string> pending_connectors;
  auto close_run = [&] {
    if (!run.empty()) out.push_back(text::join({run.begin(), run.end()}, " "));
    run.clear();
    pending_connectors.clear();
  };
  std::size_t pos = 0;
  while (pos <= body.size()) {
    // Runs never continue across a line break.
    auto eol = body.find('\n', pos);
    if (eol == std::string_view::npos) eol = body.size();
    for (const auto raw : text::split_whitespace(body.substr(pos, eol - pos))) {
      auto tok = detail::classify(raw);
      if (tok.blocked || tok.core.empty()) {
        close_run();
        continue;
      }
      if (detail::is_member(tok.core) && !(run.empty() && detail::is_run_stopword(tok.core))) {
        for (auto& c : pending_connectors) run.push_back(std::move(c));
        pending_connectors.clear();
        run.push_back(tok.core);
        if (tok.breaks) close_run();
      } else if (!run.empty() && detail::is_connector(tok.core) && !tok.breaks) {
        pending_connectors.push_back(tok.core);
      } else {
        close_run();
      }
    }
    close_run();
    pos = eol + 1;
  }
  std::vector<std::string> unique;
  std::set<std::string> seen;
  for (auto& s : out)
    if (seen.insert(text::canonicalize(s)).second) unique.push_back(std::move(s));
  return unique;
}

/// Replaces bare third-person pronouns with `anchor` (possessives get "'s").
inline std::string resolve_pronouns(std::string_view line, const std::string& anchor) {
  static const std::set<std::string, std::less<>> subject{"he", "she", "it", "they", "him", "them", "her"};
  static const std::set<std::string, std::less<>> possessive{"his", "its", "their"};
  std::vector<std::string> words;
  for (const auto raw : text::split_whitespace(line)) {
    std::size_t b = 0;
    std::size_t e = raw.size();
    while (b < e && detail::is_leading_trim(raw[b])) ++b;
    while (e > b && detail::is_trailing_trim(raw[e - 1])) --e;
    const auto core = std::string(raw.substr(b, e - b));
    const auto lower = text::casefold(core);
    std::string replacement;
    if (subject.count(lower)) replacement = anchor;
    else if (possessive.count(lower)) replacement = anchor + "'s";
    if (replacement.empty()) {
      words.emplace_back(raw);
    } else {
      words.push_back(std::string(raw.substr(0, b)) + replacement + std::string(raw.substr(e)));
    }
  }
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

inline std::string normalize_memory(std::string_view passage) {
  const auto runs = capitalized_runs(passage);
  const std::string anchor = runs.empty() ? std::string("the subject") : runs.front();
  std::string out;
  std::size_t pos = 0;
  while (pos <= passage.size()) {
    auto eol = passage.find('\n', pos);
    if (eol == std::string_view::npos) eol = passage.size();
    const auto line = text::collapse_whitespace(passage.substr(pos, eol - pos));
    if (!line.empty()) {
      if (!out.empty()) out += '\n';
      out += is_triple_line(line) ? line : resolve_pronouns(line, anchor);
    }
    pos = eol + 1;
  }
  return out;
}

/// Comparative decomposition rule. Returns the sub-questions, or empty for "no split".
inline std::vector<std::string> comparative_sub_questions(std::string_view question, int max_splits) {
  const std::string q = text::collapse_whitespace(question);
  const std::string lower = text::casefold(q);
  static const std::regex comparative(
      R"(\b(earlier|later|older|younger|first|last|longer|shorter|larger|smaller|bigger|higher|lower|more|fewer|same|different|both)\b)");
  static const std::regex or_word(R"(\bor\b)");
  if (!std::regex_search(lower, comparative) || !std::regex_search(lower, or_word)) return {};

  std::string clause = q;
  if (const auto comma = clause.rfind(','); comma != std::string::npos) clause = clause.substr(comma + 1);
  while (!clause.empty() && (clause.back() == '?' || text::is_space(clause.back()))) clause.pop_back();
  std::vector<std::string> options;
  static const std::regex splitter(R"(\s+or\s+)");
  for (std::sregex_token_iterator it(clause.begin(), clause.end(), splitter, -1), end; it != end; ++it) {
    auto opt = text::collapse_whitespace(it->str());
    if (!opt.empty()) options.push_back(std::move(opt));
  }
  if (options.size() < 2) return {};

  std::smatch m;
  static const std::regex role_born(R"(\bhas the ([a-z]+) born\b)");
  static const std::regex role_died(R"(\bhas the ([a-z]+) (?:died|who died)\b)");
  static const std::regex born(R"(\bborn (?:earlier|later|first|last)\b)");
  static const std::regex died(R"(\bdied (?:earlier|later|first|last)\b)");
  std::string prefix = "What is known about ";
  if (std::regex_search(lower, m, role_born)) prefix = "What is the birth year of the " + m[1].str() + " of ";
  else if (std::regex_search(lower, m, role_died)) prefix = "What is the death year of the " + m[1].str() + " of ";
  else if (std::regex_search(lower, born)) prefix = "What is the birth year of ";
  else if (std::regex_search(lower, died)) prefix = "What is the death year of ";

  std::vector<std::string> subs;
  for (const auto& opt : options) {
    if (static_cast<int>(subs.size()) == max_splits) break;
    subs.push_back(prefix + opt + "?");
  }
  return subs;
}

inline std::string first_answer_span(std::string_view evidence) {
  const auto b = evidence.find(kAnswerOpen);
  if (b == std::string_view::npos) return {};
  const auto start = b + kAnswerOpen.size();
  const auto e = evidence.find(kAnswerClose, start);
  if (e == std::string_view::npos) return {};
  return std::string(text::trim(evidence.substr(start, e - start)));
}

}  // namespace mock

/// Rule-based ChatProvider; stateless and therefore reentrant.
class MockChatProvider final : public ChatProvider {
 public:
  std::string complete(const ChatRequest& req) const override {
    if (req.system == prompts::kMemoryPrompt) return memory(req.user);
    if (req.system == prompts::kNerPrompt) return ner(req.user);
    if (req.system == prompts::kTriplePrompt) return triples(req.user);
    if (req.system == prompts::kAnswerPrompt) return answer(req.user);
    if (auto m = decomposition_limit(req.system)) return decompose(req.user, *m);
    return "";
  }

 private:
  static std::string memory(std::string_view user) {
    const auto passage = prompts::body_after(user, prompts::kPassageHeader);
    const auto mem = mock::normalize_memory(passage);
    return "<think>\n- direct factual text; light normalization only\n</think>\n<memory>\n" + mem + "\n</memory>";
  }

  static std::string ner(std::string_view user) {
    const auto body = prompts::body_after(user, prompts::kParagraphHeader);
    return nlohmann::json(mock::capitalized_runs(body)).dump();
  }

  static std::string triples(std::string_view user) {
    const auto body = prompts::body_after(user, prompts::kParagraphHeader, prompts::kEntitiesHeader);
    nlohmann::json out = nlohmann::json::array();
    std::size_t pos = 0;
    while (pos <= body.size()) {
      auto eol = body.find('\n', pos);
      if (eol == std::string_view::npos) eol = body.size();
      if (auto t = mock::parse_triple_line(body.substr(pos, eol - pos))) out.push_back(*t);
      pos = eol + 1;
    }
    return out.dump();
  }

  static std::string answer(std::string_view user) {
    return mock::first_answer_span(prompts::body_after(user, prompts::kEvidenceHeader));
  }

  // The rendered decomposition prompt carries its own limit ("up to N short sub-questions").
  static std::optional<int> decomposition_limit(const std::string& system) {
    static const std::regex limit(R"(provide up to (\d+) short sub-questions)");
    if (system.rfind("You are a query decomposition assistant", 0) != 0) return std::nullopt;
    std::smatch m;
    if (!std::regex_search(system, m, limit)) return std::nullopt;
    return std::stoi(m[1].str());
  }

  static std::string decompose(std::string_view user, int max_splits) {
    const auto question = prompts::body_after(user, prompts::kQuestionHeader);
    auto subs = mock::comparative_sub_questions(question, max_splits);
    nlohmann::json out{{"split", subs.size() >= 2}, {"sub_questions", subs.size() >= 2 ? subs : std::vector<std::string>{}}};
    return out.dump();
  }
};

}  // namespace gistgraph
