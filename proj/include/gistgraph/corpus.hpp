#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gistgraph/error.hpp"
#include "gistgraph/text.hpp"

namespace gistgraph {

struct Document {
  std::string doc_id;
  std::string title;
  std::string text;

  friend bool operator==(const Document&, const Document&) = default;
};

/// Provenance-preserving text chunk; the unit of final evidence.
struct Passage {
  std::string passage_id;
  std::string doc_id;
  std::size_t ordinal = 0;
  std::string text;

  friend bool operator==(const Passage&, const Passage&) = default;
};

inline constexpr std::size_t kDefaultMaxTokens = 256;
inline constexpr std::size_t kMinMaxTokens = 32;

inline std::string make_passage_id(std::string_view doc_id, std::size_t ordinal) {
  return std::string(doc_id) + "#" + std::to_string(ordinal);
}

namespace detail {

// Paragraphs are separated by lines that are empty or whitespace-only.
inline std::vector<std::string_view> split_paragraphs(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t para_start = std::string_view::npos;
  std::size_t para_end = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = text.substr(pos, eol - pos);
    if (text::trim(line).empty()) {
      if (para_start != std::string_view::npos) {
        out.push_back(text::trim(text.substr(para_start, para_end - para_start)));
        para_start = std::string_view::npos;
      }
    } else {
      if (para_start == std::string_view::npos) para_start = pos;
      para_end = eol;
    }
    pos = eol + 1;
  }
  if (para_start != std::string_view::npos) out.push_back(text::trim(text.substr(para_start, para_end - para_start)));
  return out;
}

// Sentence boundary: '.', '!' or '?' (optionally followed by closing quotes/brackets) then whitespace.
inline std::vector<std::string_view> split_sentences(std::string_view para) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < para.size(); ++i) {
    const char c = para[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < para.size() && (para[j] == '"' || para[j] == '\'' || para[j] == ')' || para[j] == ']')) ++j;
    if (j < para.size() && !text::is_space(para[j])) continue;
    const auto s = text::trim(para.substr(start, j - start));
    if (!s.empty()) out.push_back(s);
    start = j;
    i = j;
  }
  const auto tail = text::trim(para.substr(std::min(start, para.size())));
  if (!tail.empty()) out.push_back(tail);
  return out;
}

// Greedily packs units (each already <= max_tokens) into chunks of at most max_tokens.
inline std::vector<std::string> pack(const std::vector<std::string>& units, std::size_t max_tokens,
                                     std::string_view sep) {
  std::vector<std::string> out;
  std::string current;
  std::size_t current_tokens = 0;
  for (const auto& unit : units) {
    const std::size_t n = text::count_tokens(unit);
    if (!current.empty() && current_tokens + n > max_tokens) {
      out.push_back(std::move(current));
      current.clear();
      current_tokens = 0;
    }
    if (!current.empty()) current += sep;
    current += unit;
    current_tokens += n;
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

inline std::vector<std::string> split_oversized_sentence(std::string_view sentence, std::size_t max_tokens) {
  const auto tokens = text::split_whitespace(sentence);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); i += max_tokens) {
    const auto end = std::min(tokens.size(), i + max_tokens);
    out.push_back(text::join({tokens.begin() + static_cast<std::ptrdiff_t>(i),
                              tokens.begin() + static_cast<std::ptrdiff_t>(end)},
                             " "));
  }
  return out;
}

}  // namespace detail

/// Splits a document into passages of at most `max_tokens` whitespace tokens.
///
/// Paragraphs (blank-line separated) are merged greedily in order; a paragraph
/// that alone exceeds the budget is split at sentence boundaries, and a single
/// sentence over budget is cut at token boundaries. Merged paragraphs are joined
/// with a blank line, merged sentences with a space.
inline std::vector<Passage> segment(const Document& doc, std::size_t max_tokens = kDefaultMaxTokens) {
  if (max_tokens < kMinMaxTokens)
    throw InvalidArgument("segment: max_tokens must be >= " + std::to_string(kMinMaxTokens) + ", got " +
                          std::to_string(max_tokens));
  if (text::trim(doc.text).empty())
    throw InvalidArgument("segment: document '" + doc.doc_id + "' has empty text");

  std::vector<std::string> chunks;
  std::vector<std::string> pending;  // paragraphs waiting to be packed
  auto flush_pending = [&] {
    for (auto& c : detail::pack(pending, max_tokens, "\n\n")) chunks.push_back(std::move(c));
    pending.clear();
  };

  for (const auto para : detail::split_paragraphs(doc.text)) {
    if (text::count_tokens(para) <= max_tokens) {
      pending.emplace_back(para);
      continue;
    }
    flush_pending();
    std::vector<std::string> sentences;
    for (const auto s : detail::split_sentences(para)) {
      if (text::count_tokens(s) <= max_tokens) {
        sentences.push_back(text::collapse_whitespace(s));
      } else {
        for (auto& piece : detail::split_oversized_sentence(s, max_tokens)) sentences.push_back(std::move(piece));
      }
    }
    for (auto& c : detail::pack(sentences, max_tokens, " ")) chunks.push_back(std::move(c));
  }
  flush_pending();

  std::vector<Passage> out;
  out.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i)
    out.push_back(Passage{make_passage_id(doc.doc_id, i), doc.doc_id, i, std::move(chunks[i])});
  return out;
}

/// Identity segmentation for corpora that are already one passage per record.
inline std::vector<Passage> as_single_passage(const Document& doc) {
  if (text::trim(doc.text).empty())
    throw InvalidArgument("segment: document '" + doc.doc_id + "' has empty text");
  return {Passage{make_passage_id(doc.doc_id, 0), doc.doc_id, 0, doc.text}};
}

namespace detail {

inline std::string read_required_string(const nlohmann::json& rec, const char* field, std::size_t line_no) {
  if (!rec.contains(field))
    throw ParseError("line " + std::to_string(line_no) + ": missing required field '" + field + "'");
  if (!rec[field].is_string())
    throw ParseError("line " + std::to_string(line_no) + ": field '" + field + "' must be a string");
  return rec[field].get<std::string>();
}

inline std::optional<std::string> read_optional_string(const nlohmann::json& rec, const char* field,
                                                       std::size_t line_no) {
  if (!rec.contains(field) || rec[field].is_null()) return std::nullopt;
  if (!rec[field].is_string())
    throw ParseError("line " + std::to_string(line_no) + ": field '" + field + "' must be a string");
  return rec[field].get<std::string>();
}

template <typename Fn>
void for_each_jsonl_record(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path + ": line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
    }
    if (!rec.is_object()) throw ParseError(path + ": line " + std::to_string(line_no) + ": record is not an object");
    fn(rec, line_no);
  }
}

}  // namespace detail

enum class CorpusFormat { jsonl };

/// Reads a line-delimited corpus: `{"id"?: str, "title"?: str, "text": str}` per line.
/// Records without an id get `doc-<line number>`.
inline std::vector<Document> load_corpus(const std::string& path, CorpusFormat = CorpusFormat::jsonl) {
  std::vector<Document> docs;
  std::set<std::string> seen;
  detail::for_each_jsonl_record(path, [&](const nlohmann::json& rec, std::size_t line_no) {
    Document d;
    try {
      d.text = detail::read_required_string(rec, "text", line_no);
      d.doc_id = detail::read_optional_string(rec, "id", line_no).value_or("doc-" + std::to_string(line_no));
      d.title = detail::read_optional_string(rec, "title", line_no).value_or("");
    } catch (const ParseError& e) {
      throw ParseError(path + ": " + e.what());
    }
    if (text::trim(d.text).empty())
      throw ParseError(path + ": line " + std::to_string(line_no) + ": field 'text' is empty");
    if (!seen.insert(d.doc_id).second)
      throw ParseError(path + ": line " + std::to_string(line_no) + ": duplicate id '" + d.doc_id + "'");
    docs.push_back(std::move(d));
  });
  return docs;
}

struct QAExample {
  std::string question;
  std::vector<std::string> gold_answers;
  std::vector<std::string> gold_passage_ids;
};

/// Reads `{"question": str, "answers": [str], "gold_passage_ids"?: [str]}` per line.
inline std::vector<QAExample> load_queries(const std::string& path) {
  std::vector<QAExample> out;
  detail::for_each_jsonl_record(path, [&](const nlohmann::json& rec, std::size_t line_no) {
    const auto where = path + ": line " + std::to_string(line_no) + ": ";
    QAExample ex;
    try {
      ex.question = detail::read_required_string(rec, "question", line_no);
      if (!rec.contains("answers") || !rec["answers"].is_array())
        throw ParseError("line " + std::to_string(line_no) + ": missing required list field 'answers'");
      ex.gold_answers = rec["answers"].get<std::vector<std::string>>();
      if (rec.contains("gold_passage_ids") && !rec["gold_passage_ids"].is_null())
        ex.gold_passage_ids = rec["gold_passage_ids"].get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path + ": " + e.what());
    }
    if (ex.gold_answers.empty()) throw ParseError(where + "'answers' must not be empty");
    out.push_back(std::move(ex));
  });
  return out;
}

}  // namespace gistgraph
