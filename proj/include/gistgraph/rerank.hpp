#pragma once

// Score fusion over the candidate passage set, sub-query merging, and
// passage/memory evidence assembly.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "gistgraph/embedding.hpp"
#include "gistgraph/error.hpp"
#include "gistgraph/extraction.hpp"
#include "gistgraph/graph.hpp"

namespace gistgraph {

inline constexpr double kDefaultEpsilon = 0.95;
inline constexpr double kDefaultDelta = 1e-8;

struct RankedPassage {
  std::string passage_id;
  double s_diff = 0.0;   // raw diffusion score
  double s_sim = 0.0;    // raw cosine to the (sub-)query
  double norm_diff = 0.0;
  double norm_sim = 0.0;
  double s_fused = 0.0;
};

/// Descending fused score, ties by ascending passage id.
inline bool fused_before(const RankedPassage& a, const RankedPassage& b) {
  if (a.s_fused != b.s_fused) return a.s_fused > b.s_fused;
  return a.passage_id < b.passage_id;
}

/// x -> (x - min) / (max - min + delta). Constant input maps to all zeros.
inline std::map<std::string, double> minmax_normalize(const std::map<std::string, double>& scores,
                                                      double delta = kDefaultDelta) {
  if (!(delta > 0.0)) throw InvalidArgument("minmax_normalize: delta must be > 0");
  std::map<std::string, double> out;
  if (scores.empty()) return out;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& [_, x] : scores) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double denom = hi - lo + delta;
  for (const auto& [id, x] : scores) out.emplace(id, (x - lo) / denom);
  return out;
}

/// eps * norm_diff + (1 - eps) * norm_sim over the union of keys, sorted.
/// A key missing on one side takes that side's minimum.
inline std::vector<RankedPassage> fuse(const std::map<std::string, double>& norm_diff,
                                       const std::map<std::string, double>& norm_sim, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidArgument("fuse: epsilon must lie in [0, 1]");
  auto side_min = [](const std::map<std::string, double>& m) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& [_, x] : m) lo = std::min(lo, x);
    return m.empty() ? 0.0 : lo;
  };
  const double dmin = side_min(norm_diff);
  const double smin = side_min(norm_sim);
  std::set<std::string> keys;
  for (const auto& [id, _] : norm_diff) keys.insert(id);
  for (const auto& [id, _] : norm_sim) keys.insert(id);

  std::vector<RankedPassage> out;
  out.reserve(keys.size());
  for (const auto& id : keys) {
    RankedPassage r;
    r.passage_id = id;
    auto d = norm_diff.find(id);
    auto s = norm_sim.find(id);
    r.norm_diff = d == norm_diff.end() ? dmin : d->second;
    r.norm_sim = s == norm_sim.end() ? smin : s->second;
    r.s_fused = epsilon * r.norm_diff + (1.0 - epsilon) * r.norm_sim;
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), fused_before);
  return out;
}

/// Normalizes raw scores over `candidates` (imputing each side's raw minimum
/// for missing entries), fuses them, and keeps the raw values on each row.
inline std::vector<RankedPassage> rank_candidates(const std::set<std::string>& candidates,
                                                  const std::map<std::string, double>& raw_diff,
                                                  const std::map<std::string, double>& raw_sim, double epsilon,
                                                  double delta = kDefaultDelta) {
  auto restrict = [&](const std::map<std::string, double>& raw) {
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& id : candidates)
      if (auto it = raw.find(id); it != raw.end()) lo = std::min(lo, it->second);
    if (!std::isfinite(lo)) lo = 0.0;
    std::map<std::string, double> out;
    for (const auto& id : candidates) {
      auto it = raw.find(id);
      out.emplace(id, it == raw.end() ? lo : it->second);
    }
    return out;
  };
  const auto diff = restrict(raw_diff);
  const auto sim = restrict(raw_sim);
  auto ranked = fuse(minmax_normalize(diff, delta), minmax_normalize(sim, delta), epsilon);
  for (auto& r : ranked) {
    r.s_diff = diff.at(r.passage_id);
    r.s_sim = sim.at(r.passage_id);
  }
  return ranked;
}

/// Passages with positive diffusion score plus the dense top-`n_dense` by cosine.
inline std::set<std::string> candidate_set(std::span<const double> query, const VectorIndex& passage_index,
                                           const std::map<std::string, double>& diffusion_scores,
                                           std::size_t n_dense) {
  if (passage_index.empty()) throw InvalidArgument("candidate_set: the passage index is empty");
  std::set<std::string> out;
  for (const auto& [id, s] : diffusion_scores)
    if (s > 0.0) out.insert(id);
  for (auto& s : passage_index.top_k(query, n_dense)) out.insert(std::move(s.id));
  return out;
}

/// Final top-K selection across sub-query rankings.
///
/// With a single list this is plain top-K. With m lists each list contributes
/// floor((K - 1) / m) passages in its own order, skipping ids already chosen;
/// the remaining slots go to the best fused score among all candidates not yet
/// chosen (a passage seen in several pools counts with its best score). For
/// K = 5 and m = 2 this is the 2+2+1 allocation.
inline std::vector<std::string> merge_sub_query_rankings(const std::vector<std::vector<RankedPassage>>& lists,
                                                         std::size_t k) {
  std::vector<std::string> out;
  if (k == 0 || lists.empty()) return out;
  std::set<std::string> chosen;
  auto take = [&](const std::string& id) {
    if (out.size() < k && chosen.insert(id).second) out.push_back(id);
  };

  if (lists.size() == 1) {
    for (const auto& r : lists.front()) {
      if (out.size() == k) break;
      take(r.passage_id);
    }
    return out;
  }

  const std::size_t quota = (k - 1) / lists.size();
  for (const auto& list : lists) {
    std::size_t taken = 0;
    for (const auto& r : list) {
      if (taken == quota) break;
      if (chosen.count(r.passage_id)) continue;
      take(r.passage_id);
      ++taken;
    }
  }

  std::map<std::string, double> best;
  for (const auto& list : lists)
    for (const auto& r : list) {
      if (chosen.count(r.passage_id)) continue;
      auto [it, inserted] = best.emplace(r.passage_id, r.s_fused);
      if (!inserted) it->second = std::max(it->second, r.s_fused);
    }
  std::vector<ScoredId> rest;
  rest.reserve(best.size());
  for (const auto& [id, s] : best) rest.push_back({id, s});
  std::sort(rest.begin(), rest.end(), ranks_before);
  for (const auto& r : rest) {
    if (out.size() == k) break;
    take(r.id);
  }
  return out;
}

inline std::vector<std::string> merge_2_2_1(const std::vector<std::vector<RankedPassage>>& lists,
                                            std::size_t k = 5) {
  return merge_sub_query_rankings(lists, k);
}

/// Pairs each passage with its memory, preserving order.
inline std::vector<EvidencePair> assemble_evidence(const std::vector<std::string>& passage_ids,
                                                   const KnowledgeGraph& kg) {
  std::vector<EvidencePair> out;
  out.reserve(passage_ids.size());
  for (const auto& pid : passage_ids) {
    auto p = kg.passages.find(pid);
    if (p == kg.passages.end()) throw GraphError("assemble_evidence: unknown passage '" + pid + "'");
    auto link = kg.passage_to_memory.find(pid);
    if (link == kg.passage_to_memory.end())
      throw GraphError("assemble_evidence: passage '" + pid + "' has no memory");
    auto m = kg.memories.find(link->second);
    if (m == kg.memories.end() || m->second.passage_id != pid)
      throw GraphError("assemble_evidence: memory link for passage '" + pid + "' is broken");
    out.push_back({p->second, m->second});
  }
  return out;
}

}  // namespace gistgraph
