#pragma once

// Offline indexing, online retrieval and batch evaluation wired over the
// individual modules.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gistgraph/config.hpp"
#include "gistgraph/corpus.hpp"
#include "gistgraph/diffusion.hpp"
#include "gistgraph/embedding.hpp"
#include "gistgraph/eval.hpp"
#include "gistgraph/extraction.hpp"
#include "gistgraph/graph.hpp"
#include "gistgraph/parallel.hpp"
#include "gistgraph/rerank.hpp"

namespace gistgraph {

/// File names inside an index directory.
struct IndexLayout {
  std::filesystem::path dir;

  std::filesystem::path graph() const { return dir / "graph.bin"; }
  std::filesystem::path vectors(EmbedKind kind) const {
    return dir / ("vectors-" + std::string(to_string(kind)) + ".bin");
  }
  std::filesystem::path stats() const { return dir / "stats.json"; }
  std::filesystem::path checkpoint() const { return dir / "extraction.jsonl"; }
};

inline constexpr EmbedKind kIndexedKinds[] = {EmbedKind::entity, EmbedKind::memory, EmbedKind::relation,
                                              EmbedKind::fact, EmbedKind::passage};

/// Everything extracted from one passage.
struct PassageExtraction {
  MemoryRecord memory;
  std::vector<EntityMention> entities;
  std::vector<Triple> triples;
};

inline nlohmann::json to_json(const PassageExtraction& x, std::uint64_t passage_hash) {
  nlohmann::json ents = nlohmann::json::array();
  for (const auto& e : x.entities) ents.push_back({e.surface, e.canonical});
  nlohmann::json trips = nlohmann::json::array();
  for (const auto& t : x.triples) trips.push_back({t.head, t.relation, t.tail});
  return {{"passage_id", x.memory.passage_id},
          {"passage_hash", passage_hash},
          {"memory_id", x.memory.memory_id},
          {"think", x.memory.think_text},
          {"memory", x.memory.memory_text},
          {"entities", ents},
          {"triples", trips}};
}

inline PassageExtraction extraction_from_json(const nlohmann::json& j) {
  PassageExtraction x;
  x.memory = {j.at("memory_id").get<std::string>(), j.at("passage_id").get<std::string>(),
              j.at("think").get<std::string>(), j.at("memory").get<std::string>()};
  for (const auto& e : j.at("entities")) x.entities.push_back({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
  for (const auto& t : j.at("triples"))
    x.triples.push_back(
        {t.at(0).get<std::string>(), t.at(1).get<std::string>(), t.at(2).get<std::string>(), x.memory.memory_id});
  return x;
}

inline std::uint64_t passage_hash(const Passage& p) { return detail::fnv1a(p.text, detail::fnv1a(p.passage_id)); }

struct IndexOptions {
  bool pre_chunked = false;
  std::size_t max_tokens = kDefaultMaxTokens;
  std::size_t provider_concurrency = 8;
  std::size_t embed_batch_size = 64;
  std::size_t embed_concurrency = 4;
  bool force = false;  // ignore any checkpoint and rebuild from scratch

  static IndexOptions from(const Config& c, bool force) {
    return {c.pre_chunked, c.max_tokens, c.provider.max_concurrency, c.embedder.batch_size,
            c.embedder.max_concurrency, force};
  }
};

struct IndexResult {
  GraphStats stats;
  std::size_t passages_extracted = 0;  // newly extracted (not resumed from checkpoint)
  std::size_t passages_resumed = 0;
};

inline std::vector<Passage> segment_corpus(const std::vector<Document>& docs, bool pre_chunked, std::size_t max_tokens) {
  std::vector<Passage> out;
  for (const auto& d : docs)
    for (auto& p : pre_chunked ? as_single_passage(d) : segment(d, max_tokens)) out.push_back(std::move(p));
  return out;
}

/// Embeds `texts` in batches, fanning batches out over a bounded pool.
inline std::vector<Embedding> embed_all(const Embedder& embedder, const std::vector<std::string>& texts,
                                        EmbedKind kind, std::size_t batch_size, std::size_t concurrency) {
  const std::size_t batches = (texts.size() + batch_size - 1) / batch_size;
  auto chunks = parallel_map(batches, concurrency, [&](std::size_t b) {
    const auto begin = texts.begin() + static_cast<std::ptrdiff_t>(b * batch_size);
    const auto end = texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), (b + 1) * batch_size));
    auto out = embedder.embed_batch(std::vector<std::string>(begin, end), kind);
    if (out.size() != static_cast<std::size_t>(end - begin))
      throw ProviderError("embedder returned " + std::to_string(out.size()) + " vectors for " +
                          std::to_string(end - begin) + " inputs");
    return out;
  });
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (auto& c : chunks)
    for (auto& v : c) out.push_back(std::move(v));
  return out;
}

inline VectorIndex build_vector_index(const Embedder& embedder, const std::vector<std::string>& ids,
                                      const std::vector<std::string>& texts, EmbedKind kind, const IndexOptions& opt) {
  VectorIndex index(embedder.dimension());
  const auto vecs = embed_all(embedder, texts, kind, opt.embed_batch_size, opt.embed_concurrency);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    try {
      index.add(ids[i], vecs[i]);
    } catch (const InvalidArgument& e) {
      throw ProviderError(std::string(to_string(kind)) + " embedding for '" + ids[i] + "': " + e.what());
    }
  }
  return index;
}

/// Segment -> memory -> entities -> triples -> embeddings -> graph -> persisted artifacts.
///
/// Per-passage extraction results are appended to a checkpoint file as they
/// complete, so an interrupted run resumes where it stopped unless `force` is set.
class Indexer {
 public:
  Indexer(const ChatProvider& provider, const Embedder& embedder, IndexOptions options)
      : extractor_(provider), embedder_(embedder), options_(options) {}

  IndexResult run(const std::vector<Document>& docs, const std::filesystem::path& index_dir) const {
    if (docs.empty()) throw InvalidArgument("index: the corpus is empty");
    const IndexLayout layout{index_dir};
    std::filesystem::create_directories(layout.dir);
    if (options_.force) std::filesystem::remove(layout.checkpoint());

    const auto passages = segment_corpus(docs, options_.pre_chunked, options_.max_tokens);
    auto done = read_checkpoint(layout.checkpoint(), passages);

    IndexResult result;
    result.passages_resumed = done.size();
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < passages.size(); ++i)
      if (!done.count(passages[i].passage_id)) todo.push_back(i);

    std::mutex checkpoint_mutex;
    std::ofstream checkpoint(layout.checkpoint(), std::ios::app);
    auto fresh = parallel_map(todo.size(), options_.provider_concurrency, [&](std::size_t t) {
      const auto& p = passages[todo[t]];
      PassageExtraction x;
      try {
        x.memory = extractor_.extract_memory(p);
        x.entities = extractor_.extract_entities(x.memory);
        x.triples = extractor_.extract_triples(x.memory, x.entities);
      } catch (const ProviderError& e) {
        throw ProviderError("passage '" + p.passage_id + "': " + e.what(), e.raw_response());
      }
      std::lock_guard lock(checkpoint_mutex);
      checkpoint << to_json(x, passage_hash(p)).dump() << '\n' << std::flush;
      return x;
    });
    checkpoint.close();
    result.passages_extracted = fresh.size();
    for (std::size_t t = 0; t < todo.size(); ++t) done.emplace(passages[todo[t]].passage_id, std::move(fresh[t]));

    std::vector<MemoryRecord> memories;
    std::vector<Triple> triples;
    std::map<std::string, std::vector<EntityMention>> mentions;
    for (const auto& p : passages) {
      const auto& x = done.at(p.passage_id);
      memories.push_back(x.memory);
      triples.insert(triples.end(), x.triples.begin(), x.triples.end());
      mentions[x.memory.memory_id] = x.entities;
    }
    const auto kg = build_graph(passages, memories, triples, mentions);
    build_diffusion_graph(kg);  // validates that the graph is usable for retrieval

    for (auto kind : kIndexedKinds) save_index(embed_kind(kg, kind), layout.vectors(kind).string());
    save_graph(kg, layout.graph().string());
    rewrite_checkpoint(layout.checkpoint(), passages, done);
    result.stats = graph_stats(kg);
    std::ofstream(layout.stats()) << to_json(result.stats).dump() << '\n';
    return result;
  }

 private:
  VectorIndex embed_kind(const KnowledgeGraph& kg, EmbedKind kind) const {
    std::vector<std::string> ids;
    std::vector<std::string> texts;
    switch (kind) {
      case EmbedKind::entity:
        for (const auto& e : kg.entities) ids.push_back(e), texts.push_back(e);
        break;
      case EmbedKind::memory:
        for (const auto& [id, m] : kg.memories) ids.push_back(id), texts.push_back(m.memory_text);
        break;
      case EmbedKind::relation:
        for (const auto& r : kg.relations) ids.push_back(r), texts.push_back(r);
        break;
      case EmbedKind::fact:
        for (const auto& [id, f] : kg.facts) ids.push_back(id), texts.push_back(f.fact_string);
        break;
      case EmbedKind::passage:
        for (const auto& [id, p] : kg.passages) ids.push_back(id), texts.push_back(p.text);
        break;
      case EmbedKind::query:
        break;
    }
    return build_vector_index(embedder_, ids, texts, kind, options_);
  }

  static std::map<std::string, PassageExtraction> read_checkpoint(const std::filesystem::path& path,
                                                                  const std::vector<Passage>& passages) {
    std::map<std::string, PassageExtraction> out;
    std::ifstream in(path);
    if (!in) return out;
    std::map<std::string, std::uint64_t> expected;
    for (const auto& p : passages) expected.emplace(p.passage_id, passage_hash(p));
    std::string line;
    while (std::getline(in, line)) {
      // A crash can leave a partial last line; anything unreadable is simply redone.
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;
      try {
        auto it = expected.find(j.at("passage_id").get<std::string>());
        if (it == expected.end() || j.at("passage_hash").get<std::uint64_t>() != it->second) continue;
        auto x = extraction_from_json(j);
        out.insert_or_assign(it->first, std::move(x));
      } catch (const nlohmann::json::exception&) {
        continue;
      }
    }
    return out;
  }

  static void rewrite_checkpoint(const std::filesystem::path& path, const std::vector<Passage>& passages,
                                 const std::map<std::string, PassageExtraction>& done) {
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      for (const auto& p : passages) out << to_json(done.at(p.passage_id), passage_hash(p)).dump() << '\n';
    }
    std::filesystem::rename(tmp, path);
  }

  Extractor extractor_;
  const Embedder& embedder_;
  IndexOptions options_;
};

/// Persisted index loaded back into memory; immutable and shareable across threads.
struct LoadedIndex {
  KnowledgeGraph kg;
  DiffusionGraph dg;
  VectorIndex entities;
  VectorIndex memories;
  VectorIndex relations;  // stored for completeness; nothing at query time reads it
  VectorIndex facts;
  VectorIndex passages;

  static LoadedIndex load(const std::filesystem::path& dir) {
    const IndexLayout layout{dir};
    auto require = [](const std::filesystem::path& p) {
      if (!std::filesystem::exists(p))
        throw Error("index file '" + p.string() + "' not found; run the `index` command first");
      return p.string();
    };
    LoadedIndex li;
    li.kg = load_graph(require(layout.graph()));
    li.dg = build_diffusion_graph(li.kg);
    li.entities = load_index(require(layout.vectors(EmbedKind::entity)));
    li.memories = load_index(require(layout.vectors(EmbedKind::memory)));
    li.relations = load_index(require(layout.vectors(EmbedKind::relation)));
    li.facts = load_index(require(layout.vectors(EmbedKind::fact)));
    li.passages = load_index(require(layout.vectors(EmbedKind::passage)));
    if (li.passages.size() != li.kg.passages.size() || li.facts.size() != li.kg.facts.size())
      throw CorruptFileError("index directory '" + dir.string() + "': vector files do not match the graph");
    return li;
  }
};

struct RetrievalOptions {
  DiffusionParams diffusion;
  double epsilon = kDefaultEpsilon;
  double delta = kDefaultDelta;
  std::size_t k_final = 5;
  int m_split = 2;
  std::size_t n_dense = 200;

  static RetrievalOptions from(const Config& c) {
    return {c.diffusion, c.epsilon, c.delta, c.k_final, c.m_split, c.n_dense};
  }
};

struct SubQueryTrace {
  std::string query;
  std::vector<ScoredId> top_facts;
  Activation activation;
  DiffusionResult diffusion;  // empty values when no anchor was found
  std::vector<RankedPassage> ranked;
  bool no_anchor = false;
};

struct RetrievalResult {
  std::string question;
  DecompositionResult decomposition;
  std::vector<SubQueryTrace> sub_queries;
  std::vector<std::string> final_ids;   // the top-K evidence passages
  std::vector<std::string> ranked_ids;  // final_ids, then every other candidate by best fused score
  std::vector<EvidencePair> evidence;
  bool no_anchor = false;               // some sub-query fell back to dense-only ranking
};

/// Online retrieval: decomposition, per-sub-query diffusion and fusion, merge, evidence.
class Retriever {
 public:
  Retriever(const LoadedIndex& index, const Extractor& extractor, const Embedder& embedder, RetrievalOptions options)
      : index_(index), extractor_(extractor), embedder_(embedder), options_(options) {
    options_.diffusion.validate();
  }

  const RetrievalOptions& options() const noexcept { return options_; }

  SubQueryTrace run_sub_query(const std::string& query) const {
    SubQueryTrace t;
    t.query = query;
    const auto q = embedder_.embed(query, EmbedKind::query);
    if (!index_.facts.empty())
      t.top_facts = top_k_facts(fact_similarities(q, index_.facts), options_.diffusion.top_k_facts);
    t.activation = initial_activation(t.top_facts, index_.kg, index_.dg, options_.diffusion);
    t.no_anchor = t.activation.no_anchor;

    std::map<std::string, double> s_diff;
    if (!t.no_anchor) {
      t.diffusion = diffuse(t.activation.values, index_.dg, options_.diffusion);
      s_diff = passage_diffusion_scores(t.diffusion.values, index_.dg);
    }
    std::map<std::string, double> s_sim;
    for (auto& s : index_.passages.score_all(q)) s_sim.emplace(std::move(s.id), s.score);
    const auto candidates = candidate_set(q, index_.passages, s_diff, options_.n_dense);
    t.ranked = rank_candidates(candidates, s_diff, s_sim, options_.epsilon, options_.delta);
    return t;
  }

  RetrievalResult retrieve(const std::string& question) const {
    RetrievalResult r;
    r.question = question;
    r.decomposition = extractor_.decompose_query(question, options_.m_split);
    const std::vector<std::string> queries =
        r.decomposition.split ? r.decomposition.sub_questions : std::vector<std::string>{question};
    std::vector<std::vector<RankedPassage>> lists;
    for (const auto& q : queries) {
      r.sub_queries.push_back(run_sub_query(q));
      r.no_anchor = r.no_anchor || r.sub_queries.back().no_anchor;
      lists.push_back(r.sub_queries.back().ranked);
    }
    r.final_ids = merge_sub_query_rankings(lists, options_.k_final);

    std::map<std::string, double> best;
    for (const auto& list : lists)
      for (const auto& p : list) {
        auto [it, inserted] = best.emplace(p.passage_id, p.s_fused);
        if (!inserted) it->second = std::max(it->second, p.s_fused);
      }
    const std::set<std::string> chosen(r.final_ids.begin(), r.final_ids.end());
    std::vector<ScoredId> rest;
    for (const auto& [id, s] : best)
      if (!chosen.count(id)) rest.push_back({id, s});
    std::sort(rest.begin(), rest.end(), ranks_before);
    r.ranked_ids = r.final_ids;
    for (auto& s : rest) r.ranked_ids.push_back(std::move(s.id));

    r.evidence = assemble_evidence(r.final_ids, index_.kg);
    return r;
  }

 private:
  const LoadedIndex& index_;
  const Extractor& extractor_;
  const Embedder& embedder_;
  RetrievalOptions options_;
};

/// Machine-readable retrieval record. `explain` adds activations, top facts and full score tables.
inline nlohmann::json to_json(const RetrievalResult& r, const LoadedIndex& index, bool explain = false) {
  nlohmann::json j;
  j["question"] = r.question;
  j["split"] = r.decomposition.split;
  j["sub_questions"] = r.decomposition.sub_questions;
  j["no_anchor"] = r.no_anchor;

  // Scores for a final passage come from the sub-query pool where it fused best.
  nlohmann::json passages = nlohmann::json::array();
  for (std::size_t rank = 0; rank < r.final_ids.size(); ++rank) {
    const auto& id = r.final_ids[rank];
    const RankedPassage* best = nullptr;
    std::size_t from = 0;
    for (std::size_t s = 0; s < r.sub_queries.size(); ++s)
      for (const auto& p : r.sub_queries[s].ranked)
        if (p.passage_id == id && (!best || p.s_fused > best->s_fused)) {
          best = &p;
          from = s;
        }
    nlohmann::json row{{"rank", rank + 1}, {"passage_id", id}};
    if (best) {
      row["s_diff"] = best->s_diff;
      row["s_sim"] = best->s_sim;
      row["s_fused"] = best->s_fused;
      row["sub_query"] = from;
    }
    passages.push_back(std::move(row));
  }
  j["passages"] = std::move(passages);
  j["ranked_ids"] = r.ranked_ids;

  nlohmann::json evidence = nlohmann::json::array();
  for (const auto& e : r.evidence)
    evidence.push_back({{"passage_id", e.passage.passage_id},
                        {"passage", e.passage.text},
                        {"memory_id", e.memory.memory_id},
                        {"memory", e.memory.memory_text}});
  j["evidence"] = std::move(evidence);

  if (explain) {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& t : r.sub_queries) {
      nlohmann::json s;
      s["query"] = t.query;
      s["no_anchor"] = t.no_anchor;
      nlohmann::json facts = nlohmann::json::array();
      for (const auto& f : t.top_facts)
        facts.push_back({{"fact_id", f.id}, {"fact", index.kg.fact(f.id).fact_string}, {"score", f.score}});
      s["top_facts"] = std::move(facts);
      nlohmann::json seeds = nlohmann::json::array();
      for (const auto& e : t.activation.seeds)
        seeds.push_back({{"entity", e.entity},
                         {"fact_score", e.fact_score},
                         {"hits", e.hits},
                         {"reward", e.reward},
                         {"chunk_count", e.chunk_count},
                         {"activation", e.activation}});
      s["seeds"] = std::move(seeds);
      auto nonzero = [&](const std::vector<double>& v) {
        nlohmann::json out = nlohmann::json::object();
        for (std::size_t i = 0; i < v.size(); ++i)
          if (v[i] != 0.0) out[index.dg.node(i)] = v[i];
        return out;
      };
      s["pi0"] = nonzero(t.activation.values);
      s["pi_star"] = nonzero(t.diffusion.values);
      s["iterations"] = t.diffusion.iterations;
      s["converged"] = t.diffusion.converged;
      nlohmann::json ranked = nlohmann::json::array();
      for (const auto& p : t.ranked)
        ranked.push_back({{"passage_id", p.passage_id},
                          {"s_diff", p.s_diff},
                          {"s_sim", p.s_sim},
                          {"norm_diff", p.norm_diff},
                          {"norm_sim", p.norm_sim},
                          {"s_fused", p.s_fused}});
      s["ranked"] = std::move(ranked);
      subs.push_back(std::move(s));
    }
    j["explain"] = std::move(subs);
  }
  return j;
}

struct StageTimings {
  double retrieval_seconds = 0.0;
  double generation_seconds = 0.0;
  double scoring_seconds = 0.0;
};

struct EvalRun {
  eval::EvalReport report;
  std::vector<nlohmann::json> traces;  // one record per example, dataset order
  StageTimings timings;
};

struct EvalOptions {
  std::vector<std::size_t> recall_ks{2, 5, 10};
  eval::RecallMode recall_mode = eval::RecallMode::fraction;
  bool generate_answers = true;
  std::size_t workers = 4;

  static EvalOptions from(const Config& c) {
    return {c.recall_ks, c.recall_mode_enum(), c.generate_answers, c.eval_workers};
  }
};

/// Retrieves (and optionally answers) every example, then scores the batch.
inline EvalRun run_eval(const LoadedIndex& index, const Retriever& retriever, const Extractor& extractor,
                        const std::vector<QAExample>& dataset, const EvalOptions& opt) {
  using clock = std::chrono::steady_clock;
  struct Item {
    eval::SystemOutput output;
    RetrievalResult retrieval;
    double retrieval_s = 0.0;
    double generation_s = 0.0;
  };
  std::vector<const Passage*> all_passages;
  for (const auto& [_, p] : index.kg.passages) all_passages.push_back(&p);

  auto items = parallel_map(dataset.size(), opt.workers, [&](std::size_t i) {
    const auto& ex = dataset[i];
    Item it;
    auto t0 = clock::now();
    it.retrieval = retriever.retrieve(ex.question);
    auto t1 = clock::now();
    if (opt.generate_answers) it.output.prediction = extractor.generate_answer(ex.question, it.retrieval.evidence);
    auto t2 = clock::now();
    it.retrieval_s = std::chrono::duration<double>(t1 - t0).count();
    it.generation_s = std::chrono::duration<double>(t2 - t1).count();
    it.output.retrieved = it.retrieval.ranked_ids;
    if (!ex.gold_passage_ids.empty()) {
      it.output.gold_passage_ids = ex.gold_passage_ids;
    } else {
      std::vector<std::reference_wrapper<const Passage>> refs;
      for (const auto* p : all_passages) refs.emplace_back(*p);
      it.output.gold_passage_ids = eval::answer_bearing_passages(refs, ex.gold_answers);
    }
    return it;
  });

  EvalRun run;
  std::vector<eval::SystemOutput> outputs;
  for (auto& it : items) {
    outputs.push_back(it.output);
    run.timings.retrieval_seconds += it.retrieval_s;
    run.timings.generation_seconds += it.generation_s;
  }
  const auto t0 = clock::now();
  run.report = eval::evaluate(dataset, outputs, opt.recall_ks, opt.recall_mode);
  run.timings.scoring_seconds = std::chrono::duration<double>(clock::now() - t0).count();

  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = run.report.per_example[i];
    nlohmann::json rec;
    rec["index"] = i;
    rec["question"] = dataset[i].question;
    rec["gold_answers"] = dataset[i].gold_answers;
    rec["prediction"] = items[i].output.prediction;
    rec["split"] = items[i].retrieval.decomposition.split;
    rec["sub_questions"] = items[i].retrieval.decomposition.sub_questions;
    rec["no_anchor"] = items[i].retrieval.no_anchor;
    rec["retrieved"] = items[i].retrieval.final_ids;
    rec["recall_gold_ids"] = items[i].output.gold_passage_ids;
    rec["em"] = s.em;
    rec["f1"] = s.f1;
    nlohmann::json rec_at = nlohmann::json::object();
    for (const auto& [k, v] : s.recall_at) rec_at[std::to_string(k)] = v;
    rec["recall_at"] = std::move(rec_at);
    run.traces.push_back(std::move(rec));
  }
  return run;
}

}  // namespace gistgraph
