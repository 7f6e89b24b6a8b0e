#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gistgraph/corpus.hpp"
#include "gistgraph/error.hpp"
#include "gistgraph/text.hpp"

namespace gistgraph::eval {

/// Lowercase (Unicode), strip ASCII punctuation, drop a/an/the, collapse whitespace.
inline std::string normalize_answer(std::string_view s) {
  std::string folded = text::casefold(s);
  for (auto& c : folded)
    if (text::is_ascii_punct(c)) c = ' ';
  std::string out;
  for (const auto tok : text::split_whitespace(folded)) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

inline int exact_match(std::string_view pred, const std::vector<std::string>& golds) {
  const auto p = normalize_answer(pred);
  for (const auto& g : golds)
    if (normalize_answer(g) == p) return 1;
  return 0;
}

/// Token-multiset F1 against one reference.
inline double f1_single(std::string_view pred, std::string_view gold) {
  const auto p = normalize_answer(pred);
  const auto g = normalize_answer(gold);
  const auto pt = text::split_whitespace(p);
  const auto gt = text::split_whitespace(g);
  if (pt.empty() || gt.empty()) return pt.empty() && gt.empty() ? 1.0 : 0.0;
  std::map<std::string_view, int> counts;
  for (auto t : gt) ++counts[t];
  std::size_t common = 0;
  for (auto t : pt) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(pt.size());
  const double recall = static_cast<double>(common) / static_cast<double>(gt.size());
  return 2.0 * precision * recall / (precision + recall);
}

/// Best F1 over all references.
inline double f1(std::string_view pred, const std::vector<std::string>& golds) {
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, f1_single(pred, g));
  return best;
}

enum class RecallMode { fraction, hit };

/// |gold ∩ top-K| / |gold| (fraction), or 1 if any gold is in the top-K (hit).
inline double recall_at_k(const std::vector<std::string>& retrieved, const std::vector<std::string>& gold_ids,
                          std::size_t k, RecallMode mode = RecallMode::fraction) {
  if (k == 0) throw InvalidArgument("recall_at_k: k must be >= 1");
  const std::set<std::string> gold(gold_ids.begin(), gold_ids.end());
  if (gold.empty()) return 0.0;
  std::set<std::string> found;
  for (std::size_t i = 0; i < std::min(k, retrieved.size()); ++i)
    if (gold.count(retrieved[i])) found.insert(retrieved[i]);
  if (mode == RecallMode::hit) return found.empty() ? 0.0 : 1.0;
  return static_cast<double>(found.size()) / static_cast<double>(gold.size());
}

/// Passages whose normalized text contains a normalized gold answer on token boundaries.
/// Used as the recall denominator when a dataset has no gold passage ids.
template <typename PassageRange>
std::vector<std::string> answer_bearing_passages(const PassageRange& passages, const std::vector<std::string>& golds) {
  std::vector<std::string> needles;
  for (const auto& g : golds) {
    auto n = normalize_answer(g);
    if (!n.empty()) needles.push_back(" " + n + " ");
  }
  std::vector<std::string> out;
  for (const Passage& p : passages) {
    const auto hay = " " + normalize_answer(p.text) + " ";
    for (const auto& n : needles)
      if (hay.find(n) != std::string::npos) {
        out.push_back(p.passage_id);
        break;
      }
  }
  return out;
}

/// What the system produced for one question.
struct SystemOutput {
  std::string prediction;
  std::vector<std::string> retrieved;  // ranked passage ids
  std::vector<std::string> gold_passage_ids;  // resolved recall targets (dataset ids or answer-bearing)
};

struct ExampleScore {
  int em = 0;
  double f1 = 0.0;
  std::map<std::size_t, double> recall_at;
};

struct EvalReport {
  double em = 0.0;
  double f1 = 0.0;
  std::map<std::size_t, double> recall_at;
  std::size_t n = 0;
  std::string recall_mode = "fraction";
  std::string recall_gold = "gold_passage_ids";  // or "answer_containment" / "mixed"
  std::vector<ExampleScore> per_example;
};

inline ExampleScore score_example(const QAExample& ex, const SystemOutput& out, const std::vector<std::size_t>& ks,
                                  RecallMode mode) {
  ExampleScore s;
  s.em = exact_match(out.prediction, ex.gold_answers);
  s.f1 = f1(out.prediction, ex.gold_answers);
  for (auto k : ks) s.recall_at[k] = recall_at_k(out.retrieved, out.gold_passage_ids, k, mode);
  return s;
}

/// Means x100 over examples. `outputs[i]` answers `dataset[i]`.
inline EvalReport evaluate(const std::vector<QAExample>& dataset, const std::vector<SystemOutput>& outputs,
                           const std::vector<std::size_t>& ks = {5}, RecallMode mode = RecallMode::fraction) {
  if (dataset.empty()) throw InvalidArgument("evaluate: empty dataset");
  if (dataset.size() != outputs.size()) throw InvalidArgument("evaluate: dataset/output size mismatch");
  EvalReport r;
  r.n = dataset.size();
  r.recall_mode = mode == RecallMode::fraction ? "fraction" : "hit";
  std::size_t with_ids = 0;
  for (const auto& ex : dataset) with_ids += ex.gold_passage_ids.empty() ? 0 : 1;
  r.recall_gold = with_ids == dataset.size() ? "gold_passage_ids" : with_ids == 0 ? "answer_containment" : "mixed";
  double em = 0.0;
  double f = 0.0;
  std::map<std::size_t, double> rec;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto s = score_example(dataset[i], outputs[i], ks, mode);
    em += s.em;
    f += s.f1;
    for (const auto& [k, v] : s.recall_at) rec[k] += v;
    r.per_example.push_back(std::move(s));
  }
  const double n = static_cast<double>(r.n);
  r.em = 100.0 * em / n;
  r.f1 = 100.0 * f / n;
  for (const auto& [k, v] : rec) r.recall_at[k] = 100.0 * v / n;
  return r;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json rec = nlohmann::json::object();
  for (const auto& [k, v] : r.recall_at) rec[std::to_string(k)] = v;
  return {{"em", r.em},         {"f1", r.f1},
          {"recall_at", rec},   {"n", r.n},
          {"recall_mode", r.recall_mode}, {"recall_gold", r.recall_gold}};
}

}  // namespace gistgraph::eval
