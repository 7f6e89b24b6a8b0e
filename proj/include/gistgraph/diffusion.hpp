#pragma once

// Fact-anchored entity activation and random walk with restart over the
// passage-entity graph.

#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gistgraph/embedding.hpp"
#include "gistgraph/error.hpp"
#include "gistgraph/graph.hpp"

namespace gistgraph {

struct DiffusionParams {
  std::size_t top_k_facts = 50;
  double alpha = 2.0;  // reward magnitude
  double beta = 1.0;   // reward saturation rate
  double gamma = 0.5;  // restart probability
  double tol = 1e-8;   // L1 change between successive iterates
  std::size_t max_iters = 200;

  void validate() const {
    if (top_k_facts == 0) throw InvalidArgument("diffusion: top_k_facts must be >= 1");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("diffusion: alpha must be >= 0");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("diffusion: beta must be > 0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("diffusion: gamma must lie in (0, 1)");
    if (!(tol > 0.0)) throw InvalidArgument("diffusion: tol must be > 0");
    if (max_iters == 0) throw InvalidArgument("diffusion: max_iters must be >= 1");
  }
};

/// Cosine of the query against every textualized fact.
inline std::map<std::string, double> fact_similarities(std::span<const double> query, const VectorIndex& fact_index) {
  std::map<std::string, double> out;
  for (auto& s : fact_index.score_all(query)) out.emplace(std::move(s.id), s.score);
  return out;
}

inline std::vector<ScoredId> top_k_facts(const std::map<std::string, double>& sims, std::size_t k) {
  std::vector<ScoredId> all;
  all.reserve(sims.size());
  for (const auto& [id, s] : sims) all.push_back({id, s});
  return top_k(std::move(all), k);
}

inline bool fact_mentions(const Fact& f, const std::string& entity) { return f.head == entity || f.tail == entity; }

/// Mean similarity over the top-K facts whose head or tail is `entity`; 0 when none hit.
inline double entity_fact_score(const std::string& entity, std::span<const ScoredId> topk, const KnowledgeGraph& kg) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (const auto& s : topk) {
    if (fact_mentions(kg.fact(s.id), entity)) {
      sum += s.score;
      ++hits;
    }
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

/// 1 + alpha * (1 - exp(-beta * hits)).
inline double frequency_reward(std::size_t hits, double alpha, double beta) {
  return 1.0 + alpha * (1.0 - std::exp(-beta * static_cast<double>(hits)));
}

/// Unnormalized activation of one entity: evidence x reward / max(1, n_v).
inline double entity_activation(double fact_score, double reward, std::size_t chunk_count) {
  return fact_score * reward / static_cast<double>(std::max<std::size_t>(1, chunk_count));
}

struct EntitySeed {
  std::string entity;
  double fact_score = 0.0;
  std::size_t hits = 0;
  double reward = 1.0;
  std::size_t chunk_count = 0;
  double activation = 0.0;  // before normalization
};

struct Activation {
  std::vector<double> values;        // over DiffusionGraph nodes, sums to 1 unless no_anchor
  std::vector<EntitySeed> seeds;     // entities with a top-K hit, in node order
  bool no_anchor = true;             // total mass was zero
};

/// Initial activation over the diffusion graph nodes. Passage nodes start at 0.
inline Activation initial_activation(std::span<const ScoredId> topk, const KnowledgeGraph& kg,
                                     const DiffusionGraph& dg, const DiffusionParams& params) {
  params.validate();
  // Accumulate per-entity hit counts and score sums in one pass over the top-K list.
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& s : topk) {
    const auto& f = kg.fact(s.id);
    auto bump = [&](const std::string& e) {
      auto& [sum, n] = acc[e];
      sum += s.score;
      ++n;
    };
    bump(f.head);
    if (f.tail != f.head) bump(f.tail);
  }

  Activation a;
  a.values.assign(dg.size(), 0.0);
  double total = 0.0;
  for (const auto& [entity, sn] : acc) {
    const auto idx = dg.find(entity);
    if (!idx || dg.is_passage(*idx)) continue;
    EntitySeed seed;
    seed.entity = entity;
    seed.hits = sn.second;
    seed.fact_score = sn.first / static_cast<double>(sn.second);
    seed.reward = frequency_reward(seed.hits, params.alpha, params.beta);
    seed.chunk_count = kg.chunk_count(entity);
    seed.activation = entity_activation(seed.fact_score, seed.reward, seed.chunk_count);
    if (seed.activation > 0.0) {
      a.values[*idx] = seed.activation;
      total += seed.activation;
    }
    a.seeds.push_back(std::move(seed));
  }
  a.no_anchor = !(total > 0.0);
  if (!a.no_anchor)
    for (auto& v : a.values) v /= total;
  return a;
}

struct DiffusionResult {
  std::vector<double> values;
  std::size_t iterations = 0;
  bool converged = false;
  double last_delta = 0.0;
};

/// Called after every iteration with (iteration, current iterate).
using DiffusionObserver = std::function<void(std::size_t, std::span<const double>)>;

/// pi <- (1 - gamma) W pi + gamma pi0, where W is column-stochastic; mass sitting
/// on dangling nodes is returned to pi0 so the iterate stays a distribution.
inline DiffusionResult diffuse(std::span<const double> pi0, const DiffusionGraph& dg, const DiffusionParams& params,
                               const DiffusionObserver& observer = {}) {
  params.validate();
  if (pi0.size() != dg.size()) throw InvalidArgument("diffuse: pi0 size does not match the graph");
  DiffusionResult r;
  std::vector<double> cur(pi0.begin(), pi0.end());
  std::vector<double> next(cur.size());
  const double walk = 1.0 - params.gamma;
  for (std::size_t it = 1; it <= params.max_iters; ++it) {
    dg.multiply(cur, next);
    double dangling_mass = 0.0;
    for (std::size_t j = 0; j < cur.size(); ++j)
      if (dg.dangling(j)) dangling_mass += cur[j];
    const double restart = params.gamma + walk * dangling_mass;
    double delta = 0.0;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      next[i] = walk * next[i] + restart * pi0[i];
      delta += std::abs(next[i] - cur[i]);
    }
    cur.swap(next);
    r.iterations = it;
    r.last_delta = delta;
    if (observer) observer(it, cur);
    if (delta < params.tol) {
      r.converged = true;
      break;
    }
  }
  r.values = std::move(cur);
  return r;
}

/// Restriction of the stationary activation to passage nodes.
inline std::map<std::string, double> passage_diffusion_scores(std::span<const double> pi_star,
                                                              const DiffusionGraph& dg) {
  std::map<std::string, double> out;
  for (std::size_t i = dg.num_entities(); i < dg.size(); ++i) out.emplace(dg.node(i), pi_star[i]);
  return out;
}

}  // namespace gistgraph
