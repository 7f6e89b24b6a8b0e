#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gistgraph/corpus.hpp"
#include "gistgraph/embedding.hpp"
#include "gistgraph/error.hpp"
#include "gistgraph/extraction.hpp"

namespace gistgraph {

/// Textualized triple anchored to the memory it was extracted from.
struct Fact {
  std::string fact_id;
  std::string head;
  std::string relation;
  std::string tail;
  std::string fact_string;
  std::string memory_id;

  friend bool operator==(const Fact&, const Fact&) = default;
};

inline std::string fact_string(std::string_view head, std::string_view relation, std::string_view tail) {
  return std::string(head) + " " + std::string(relation) + " " + std::string(tail);
}

inline std::string fact_id_for(std::size_t ordinal) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "fact-%08zu", ordinal);
  return buf;
}

/// Entities (V), memories (M), relation types (E), facts (F) and passages (P)
/// with the provenance maps that tie them together.
struct KnowledgeGraph {
  std::set<std::string> entities;
  std::map<std::string, MemoryRecord> memories;
  std::set<std::string> relations;
  std::map<std::string, Fact> facts;
  std::map<std::string, Passage> passages;
  std::map<std::string, std::string> memory_to_passage;
  std::map<std::string, std::string> passage_to_memory;
  std::map<std::string, std::string> fact_to_memory;
  std::map<std::string, std::set<std::string>> entity_to_passages;
  std::map<std::string, std::set<std::string>> memory_to_entities;

  /// n_v: number of passages linked to the entity (0 if unknown).
  std::size_t chunk_count(const std::string& entity) const {
    auto it = entity_to_passages.find(entity);
    return it == entity_to_passages.end() ? 0 : it->second.size();
  }

  const Fact& fact(const std::string& fact_id) const {
    auto it = facts.find(fact_id);
    if (it == facts.end()) throw GraphError("unknown fact '" + fact_id + "'");
    return it->second;
  }

  /// Passage a fact was ultimately extracted from (fact -> memory -> passage).
  const Passage& provenance(const std::string& fact_id) const {
    const auto& mem = fact_to_memory.at(fact_id);
    return passages.at(memory_to_passage.at(mem));
  }

  friend bool operator==(const KnowledgeGraph&, const KnowledgeGraph&) = default;
};

/// Builds the knowledge graph from per-passage extraction output.
///
/// `entities_by_memory` carries standalone NER mentions keyed by memory id;
/// triple endpoints are added as entities regardless.
inline KnowledgeGraph build_graph(const std::vector<Passage>& passages, const std::vector<MemoryRecord>& memories,
                                  const std::vector<Triple>& triples,
                                  const std::map<std::string, std::vector<EntityMention>>& entities_by_memory = {}) {
  KnowledgeGraph kg;
  for (const auto& p : passages)
    if (!kg.passages.emplace(p.passage_id, p).second) throw GraphError("duplicate passage id '" + p.passage_id + "'");

  for (const auto& m : memories) {
    if (!kg.passages.count(m.passage_id))
      throw GraphError("memory '" + m.memory_id + "' references unknown passage '" + m.passage_id + "'");
    if (m.memory_text.empty()) throw GraphError("memory '" + m.memory_id + "' is empty");
    if (!kg.memories.emplace(m.memory_id, m).second) throw GraphError("duplicate memory id '" + m.memory_id + "'");
    if (!kg.passage_to_memory.emplace(m.passage_id, m.memory_id).second)
      throw GraphError("passage '" + m.passage_id + "' has more than one memory");
    kg.memory_to_passage.emplace(m.memory_id, m.passage_id);
    kg.memory_to_entities[m.memory_id];
  }
  for (const auto& [pid, _] : kg.passages)
    if (!kg.passage_to_memory.count(pid)) throw GraphError("passage '" + pid + "' has no memory");

  for (const auto& [mid, mentions] : entities_by_memory) {
    if (!kg.memories.count(mid)) throw GraphError("entity list references unknown memory '" + mid + "'");
    for (const auto& e : mentions) {
      if (e.canonical.empty()) continue;
      kg.entities.insert(e.canonical);
      kg.memory_to_entities[mid].insert(e.canonical);
    }
  }

  std::set<std::tuple<std::string, std::string, std::string, std::string>> seen;
  for (const auto& t : triples) {
    if (!kg.memories.count(t.memory_id))
      throw GraphError("triple (" + t.head + ", " + t.relation + ", " + t.tail + ") references unknown memory '" +
                       t.memory_id + "'");
    if (t.head.empty() || t.tail.empty())
      throw GraphError("triple (" + t.head + ", " + t.relation + ", " + t.tail + ") has an empty endpoint");
    if (!seen.emplace(t.head, t.relation, t.tail, t.memory_id).second) continue;
    Fact f{fact_id_for(kg.facts.size()), t.head, t.relation, t.tail, fact_string(t.head, t.relation, t.tail),
           t.memory_id};
    kg.entities.insert(t.head);
    kg.entities.insert(t.tail);
    kg.relations.insert(t.relation);
    kg.memory_to_entities[t.memory_id].insert(t.head);
    kg.memory_to_entities[t.memory_id].insert(t.tail);
    kg.fact_to_memory.emplace(f.fact_id, f.memory_id);
    kg.facts.emplace(f.fact_id, std::move(f));
  }

  for (const auto& [mid, ents] : kg.memory_to_entities)
    for (const auto& e : ents) kg.entity_to_passages[e].insert(kg.memory_to_passage.at(mid));
  return kg;
}

/// Passage-entity graph used for diffusion, stored column-compressed.
///
/// Nodes are the entities (sorted) followed by the passages (sorted). Column j
/// holds the transition probabilities out of node j, so every non-dangling
/// column sums to 1.
class DiffusionGraph {
 public:
  struct Edge {
    std::size_t a = 0;
    std::size_t b = 0;
    double weight = 1.0;
  };

  /// Undirected weighted edges; parallel edges accumulate, self-loops are ignored.
  static DiffusionGraph from_edges(std::vector<std::string> nodes, std::size_t num_entities,
                                   const std::vector<Edge>& edges) {
    if (nodes.empty()) throw GraphError("diffusion graph has no nodes");
    if (num_entities > nodes.size()) throw GraphError("num_entities exceeds node count");
    DiffusionGraph g;
    g.nodes_ = std::move(nodes);
    g.num_entities_ = num_entities;
    for (std::size_t i = 0; i < g.nodes_.size(); ++i)
      if (!g.index_.emplace(g.nodes_[i], i).second) throw GraphError("duplicate node '" + g.nodes_[i] + "'");

    const auto n = g.nodes_.size();
    std::vector<std::map<std::size_t, double>> columns(n);
    for (const auto& e : edges) {
      if (e.a >= n || e.b >= n) throw GraphError("edge endpoint out of range");
      if (!(e.weight > 0.0)) throw GraphError("edge weight must be positive");
      if (e.a == e.b) continue;
      columns[e.b][e.a] += e.weight;
      columns[e.a][e.b] += e.weight;
    }
    g.col_ptr_.assign(n + 1, 0);
    g.dangling_.assign(n, false);
    for (std::size_t j = 0; j < n; ++j) {
      double sum = 0.0;
      for (const auto& [i, w] : columns[j]) sum += w;
      g.dangling_[j] = columns[j].empty();
      for (const auto& [i, w] : columns[j]) {
        g.rows_.push_back(i);
        g.multiplicity_.push_back(w);
        g.values_.push_back(w / sum);
      }
      g.col_ptr_[j + 1] = g.rows_.size();
    }
    return g;
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t num_entities() const noexcept { return num_entities_; }
  std::size_t num_passages() const noexcept { return nodes_.size() - num_entities_; }
  bool is_passage(std::size_t i) const noexcept { return i >= num_entities_; }
  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  const std::string& node(std::size_t i) const { return nodes_.at(i); }
  bool dangling(std::size_t j) const { return dangling_.at(j); }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Entries of column j as (row, normalized weight, raw multiplicity).
  template <typename Fn>
  void for_each_in_column(std::size_t j, Fn&& fn) const {
    for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) fn(rows_[k], values_[k], multiplicity_[k]);
  }

  /// W[i][j]; linear scan of column j.
  double weight(std::size_t i, std::size_t j) const {
    for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k)
      if (rows_[k] == i) return values_[k];
    return 0.0;
  }

  /// Number of distinct undirected edges.
  std::size_t edge_count() const noexcept { return rows_.size() / 2; }

  /// out = W x, accumulated column by column (fixed order, deterministic).
  void multiply(std::span<const double> x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
      const double xj = x[j];
      if (xj == 0.0) continue;
      for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) out[rows_[k]] += values_[k] * xj;
    }
  }

 private:
  std::vector<std::string> nodes_;
  std::size_t num_entities_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> col_ptr_;
  std::vector<std::size_t> rows_;
  std::vector<double> values_;
  std::vector<double> multiplicity_;
  std::vector<bool> dangling_;
};

namespace detail {

// (entity, entity) multiplicities over facts, excluding self-loops.
inline std::map<std::pair<std::string, std::string>, double> entity_pair_weights(const KnowledgeGraph& kg) {
  std::map<std::pair<std::string, std::string>, double> out;
  for (const auto& [_, f] : kg.facts) {
    if (f.head == f.tail) continue;
    out[std::minmax(f.head, f.tail)] += 1.0;
  }
  return out;
}

}  // namespace detail

/// Entity-entity edges per fact endpoint pair (weight = multiplicity) and
/// entity-passage edges per entity occurrence in the passage's memory.
inline DiffusionGraph build_diffusion_graph(const KnowledgeGraph& kg) {
  std::vector<std::string> nodes(kg.entities.begin(), kg.entities.end());
  const std::size_t num_entities = nodes.size();
  for (const auto& [pid, _] : kg.passages) nodes.push_back(pid);
  if (nodes.empty()) throw GraphError("cannot build a diffusion graph from an empty knowledge graph");

  std::unordered_map<std::string, std::size_t> ent_idx;
  for (std::size_t i = 0; i < num_entities; ++i) ent_idx.emplace(nodes[i], i);
  std::unordered_map<std::string, std::size_t> psg_idx;
  for (std::size_t i = num_entities; i < nodes.size(); ++i) psg_idx.emplace(nodes[i], i);

  std::vector<DiffusionGraph::Edge> edges;
  for (const auto& [pair, w] : detail::entity_pair_weights(kg))
    edges.push_back({ent_idx.at(pair.first), ent_idx.at(pair.second), w});
  for (const auto& [entity, pids] : kg.entity_to_passages)
    for (const auto& pid : pids) edges.push_back({ent_idx.at(entity), psg_idx.at(pid), 1.0});
  return DiffusionGraph::from_edges(std::move(nodes), num_entities, edges);
}

struct GraphStats {
  std::size_t entities = 0;
  std::size_t memories = 0;
  std::size_t relations = 0;
  std::size_t facts = 0;
  std::size_t passages = 0;
  std::size_t nodes = 0;                 // |V| + |M| + |P|
  std::size_t entity_entity_edges = 0;   // distinct undirected pairs in the diffusion graph
  std::size_t entity_passage_edges = 0;
  std::size_t memory_entity_links = 0;
  std::size_t memory_fact_links = 0;
  std::size_t memory_passage_links = 0;
  std::size_t edges = 0;                 // sum of the five edge/link counts above

  friend bool operator==(const GraphStats&, const GraphStats&) = default;
};

inline GraphStats graph_stats(const KnowledgeGraph& kg) {
  GraphStats s;
  s.entities = kg.entities.size();
  s.memories = kg.memories.size();
  s.relations = kg.relations.size();
  s.facts = kg.facts.size();
  s.passages = kg.passages.size();
  s.nodes = s.entities + s.memories + s.passages;
  s.entity_entity_edges = detail::entity_pair_weights(kg).size();
  for (const auto& [_, pids] : kg.entity_to_passages) s.entity_passage_edges += pids.size();
  for (const auto& [_, ents] : kg.memory_to_entities) s.memory_entity_links += ents.size();
  s.memory_fact_links = kg.fact_to_memory.size();
  s.memory_passage_links = kg.memory_to_passage.size();
  s.edges = s.entity_entity_edges + s.entity_passage_edges + s.memory_entity_links + s.memory_fact_links +
            s.memory_passage_links;
  return s;
}

inline nlohmann::json to_json(const GraphStats& s) {
  return {{"entities", s.entities},
          {"memories", s.memories},
          {"relations", s.relations},
          {"facts", s.facts},
          {"passages", s.passages},
          {"nodes", s.nodes},
          {"edges", s.edges},
          {"entity_entity_edges", s.entity_entity_edges},
          {"entity_passage_edges", s.entity_passage_edges},
          {"memory_entity_links", s.memory_entity_links},
          {"memory_fact_links", s.memory_fact_links},
          {"memory_passage_links", s.memory_passage_links}};
}

// Graph file layout (little-endian):
//   magic "GGKGRAPH" | u32 version | u32 payload_len | payload (compact JSON) | u64 FNV-1a checksum
// The JSON payload has keys: passages, memories, facts, entities, relations,
// entity_to_passages, memory_to_entities. Derived maps are rebuilt on load.
namespace detail {

inline constexpr char kGraphMagic[8] = {'G', 'G', 'K', 'G', 'R', 'A', 'P', 'H'};
inline constexpr std::uint32_t kGraphVersion = 1;

}  // namespace detail

inline void save_graph(const KnowledgeGraph& kg, const std::string& path) {
  nlohmann::json j;
  j["passages"] = nlohmann::json::array();
  for (const auto& [_, p] : kg.passages)
    j["passages"].push_back({{"id", p.passage_id}, {"doc_id", p.doc_id}, {"ordinal", p.ordinal}, {"text", p.text}});
  j["memories"] = nlohmann::json::array();
  for (const auto& [_, m] : kg.memories)
    j["memories"].push_back(
        {{"id", m.memory_id}, {"passage_id", m.passage_id}, {"think", m.think_text}, {"memory", m.memory_text}});
  j["facts"] = nlohmann::json::array();
  for (const auto& [_, f] : kg.facts)
    j["facts"].push_back({{"id", f.fact_id}, {"head", f.head}, {"relation", f.relation}, {"tail", f.tail},
                          {"memory_id", f.memory_id}});
  j["entities"] = kg.entities;
  j["relations"] = kg.relations;
  j["entity_to_passages"] = kg.entity_to_passages;
  j["memory_to_entities"] = kg.memory_to_entities;

  detail::BinaryWriter w;
  w.bytes({detail::kGraphMagic, sizeof detail::kGraphMagic});
  w.pod(detail::kGraphVersion);
  w.str(j.dump());
  w.finish_and_write(path);
}

inline KnowledgeGraph load_graph(const std::string& path) {
  detail::BinaryReader r(path, "graph");
  if (r.bytes(sizeof detail::kGraphMagic) != std::string_view(detail::kGraphMagic, sizeof detail::kGraphMagic))
    r.fail("bad magic header");
  if (const auto v = r.pod<std::uint32_t>(); v != detail::kGraphVersion)
    r.fail("unsupported version " + std::to_string(v) + " (expected " + std::to_string(detail::kGraphVersion) + ")");
  const auto payload = r.str();
  if (!r.at_end()) r.fail("trailing bytes");

  KnowledgeGraph kg;
  try {
    const auto j = nlohmann::json::parse(payload);
    for (const auto& p : j.at("passages")) {
      Passage psg{p.at("id").get<std::string>(), p.at("doc_id").get<std::string>(),
                  p.at("ordinal").get<std::size_t>(), p.at("text").get<std::string>()};
      kg.passages.emplace(psg.passage_id, std::move(psg));
    }
    for (const auto& m : j.at("memories")) {
      MemoryRecord rec{m.at("id").get<std::string>(), m.at("passage_id").get<std::string>(),
                       m.at("think").get<std::string>(), m.at("memory").get<std::string>()};
      if (!kg.passages.count(rec.passage_id)) r.fail("memory '" + rec.memory_id + "' has no passage");
      kg.memory_to_passage.emplace(rec.memory_id, rec.passage_id);
      kg.passage_to_memory.emplace(rec.passage_id, rec.memory_id);
      kg.memories.emplace(rec.memory_id, std::move(rec));
    }
    for (const auto& f : j.at("facts")) {
      Fact fact{f.at("id").get<std::string>(), f.at("head").get<std::string>(), f.at("relation").get<std::string>(),
                f.at("tail").get<std::string>(), "", f.at("memory_id").get<std::string>()};
      fact.fact_string = fact_string(fact.head, fact.relation, fact.tail);
      if (!kg.memories.count(fact.memory_id)) r.fail("fact '" + fact.fact_id + "' has no memory");
      kg.fact_to_memory.emplace(fact.fact_id, fact.memory_id);
      kg.facts.emplace(fact.fact_id, std::move(fact));
    }
    kg.entities = j.at("entities").get<std::set<std::string>>();
    kg.relations = j.at("relations").get<std::set<std::string>>();
    kg.entity_to_passages = j.at("entity_to_passages").get<std::map<std::string, std::set<std::string>>>();
    kg.memory_to_entities = j.at("memory_to_entities").get<std::map<std::string, std::set<std::string>>>();
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("malformed payload: ") + e.what());
  }
  if (kg.passage_to_memory.size() != kg.passages.size()) r.fail("passage/memory mapping is not a bijection");
  return kg;
}

}  // namespace gistgraph
