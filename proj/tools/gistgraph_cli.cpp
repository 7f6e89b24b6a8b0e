// Command-line front end: index, retrieve, answer, explain, eval, stats, sweep.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gistgraph/gistgraph.hpp"
#include "gistgraph/http.hpp"

namespace fs = std::filesystem;
using namespace gistgraph;

namespace {

struct Providers {
  std::unique_ptr<ChatProvider> chat;
  std::unique_ptr<Embedder> embedder;
};

Providers make_providers(const Config& c) {
  Providers p;
  if (c.provider.mode == "mock") p.chat = std::make_unique<MockChatProvider>();
  else p.chat = std::make_unique<HttpChatProvider>(chat_settings(c.provider));
  if (c.embedder.mode == "mock")
    p.embedder = std::make_unique<MockEmbedder>(MockEmbedderOptions{c.embedder.dimension, c.embedder.bigrams, c.embedder.drop_stopwords});
  else
    p.embedder = std::make_unique<HttpEmbedder>(embedding_settings(c.embedder), c.embedder.dimension,
                                                c.embedder.query_instruction);
  return p;
}

struct CommonFlags {
  std::string config_path;
  bool mock = false;
  std::optional<std::size_t> k;
  std::optional<double> epsilon;
  bool json = false;
};

Config resolve_config(const CommonFlags& f) {
  Config c = load_config(f.config_path);
  if (f.mock) {
    c.provider.mode = "mock";
    c.embedder.mode = "mock";
  }
  if (f.k) c.k_final = *f.k;
  if (f.epsilon) c.epsilon = *f.epsilon;
  c.validate();
  return c;
}

void write_lines(const fs::path& path, const std::vector<nlohmann::json>& records) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& r : records) out << r.dump() << '\n';
}

void print_stats_table(const GraphStats& s) {
  std::printf("%-22s %10s\n", "component", "count");
  const std::pair<const char*, std::size_t> rows[] = {
      {"entities", s.entities},
      {"memories", s.memories},
      {"relations", s.relations},
      {"facts", s.facts},
      {"passages", s.passages},
      {"nodes", s.nodes},
      {"entity-entity edges", s.entity_entity_edges},
      {"entity-passage edges", s.entity_passage_edges},
      {"memory-entity links", s.memory_entity_links},
      {"memory-fact links", s.memory_fact_links},
      {"memory-passage links", s.memory_passage_links},
      {"edges (total)", s.edges}};
  for (const auto& [name, n] : rows) std::printf("%-22s %10zu\n", name, n);
}

void print_retrieval(const RetrievalResult& r, const std::string* answer) {
  std::printf("question: %s\n", r.question.c_str());
  if (r.decomposition.split)
    for (std::size_t i = 0; i < r.decomposition.sub_questions.size(); ++i)
      std::printf("  sub-question %zu: %s\n", i + 1, r.decomposition.sub_questions[i].c_str());
  if (r.no_anchor) std::printf("  (no fact anchor found; dense-only fallback)\n");
  std::printf("%-5s %-28s\n", "rank", "passage");
  for (std::size_t i = 0; i < r.final_ids.size(); ++i) std::printf("%-5zu %-28s\n", i + 1, r.final_ids[i].c_str());
  if (answer) std::printf("answer: %s\n", answer->c_str());
}

void print_report_row(const std::string& label, const eval::EvalReport& rep) {
  std::printf("%-28s EM %6.2f  F1 %6.2f", label.c_str(), rep.em, rep.f1);
  for (const auto& [k, v] : rep.recall_at) std::printf("  R@%zu %6.2f", k, v);
  std::printf("  (n=%zu, recall %s/%s)\n", rep.n, rep.recall_mode.c_str(), rep.recall_gold.c_str());
}

int cmd_index(const CommonFlags& f, bool force) {
  const auto cfg = resolve_config(f);
  if (cfg.corpus.empty()) throw ParseError("config: 'corpus' is required for indexing");
  const auto docs = load_corpus(cfg.corpus);
  auto p = make_providers(cfg);
  Indexer indexer(*p.chat, *p.embedder, IndexOptions::from(cfg, force));
  const auto result = indexer.run(docs, cfg.index_dir);
  if (f.json) {
    std::cout << to_json(result.stats).dump() << '\n';
  } else {
    std::printf("indexed %zu documents into %s (%zu passages extracted, %zu resumed)\n", docs.size(),
                cfg.index_dir.c_str(), result.passages_extracted, result.passages_resumed);
    print_stats_table(result.stats);
  }
  return 0;
}

int cmd_stats(const CommonFlags& f) {
  const auto cfg = resolve_config(f);
  const auto kg = load_graph(IndexLayout{cfg.index_dir}.graph().string());
  const auto s = graph_stats(kg);
  if (f.json) std::cout << to_json(s).dump() << '\n';
  else print_stats_table(s);
  return 0;
}

int cmd_retrieve(const CommonFlags& f, const std::string& question, bool explain, bool answer) {
  const auto cfg = resolve_config(f);
  auto p = make_providers(cfg);
  const auto index = LoadedIndex::load(cfg.index_dir);
  Extractor extractor(*p.chat);
  Retriever retriever(index, extractor, *p.embedder, RetrievalOptions::from(cfg));
  const auto r = retriever.retrieve(question);
  std::string predicted;
  if (answer) predicted = extractor.generate_answer(question, r.evidence);
  if (f.json) {
    auto rec = to_json(r, index, explain);
    if (answer) rec["answer"] = predicted;
    std::cout << rec.dump() << '\n';
  } else {
    print_retrieval(r, answer ? &predicted : nullptr);
    if (explain) std::cout << to_json(r, index, true)["explain"].dump(2) << '\n';
  }
  return 0;
}

int cmd_eval(const CommonFlags& f, const std::string& dataset_path, const std::string& out_dir) {
  const auto cfg = resolve_config(f);
  const auto dataset = load_queries(dataset_path);
  auto p = make_providers(cfg);
  const auto index = LoadedIndex::load(cfg.index_dir);
  Extractor extractor(*p.chat);
  Retriever retriever(index, extractor, *p.embedder, RetrievalOptions::from(cfg));
  const auto run = run_eval(index, retriever, extractor, dataset, EvalOptions::from(cfg));

  const fs::path dir = out_dir.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir);
  write_lines(dir / "report.jsonl", {eval::to_json(run.report)});
  write_lines(dir / "traces.jsonl", run.traces);
  write_lines(dir / "timings.json", {{{"retrieval_seconds", run.timings.retrieval_seconds},
                                      {"generation_seconds", run.timings.generation_seconds},
                                      {"scoring_seconds", run.timings.scoring_seconds}}});
  if (f.json) std::cout << eval::to_json(run.report).dump() << '\n';
  else print_report_row(fs::path(dataset_path).filename().string(), run.report);
  return 0;
}

// "alpha=1,2" -> ("alpha", {1, 2})
std::pair<std::string, std::vector<double>> parse_grid_axis(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw ParseError("sweep: grid axis '" + spec + "' must look like name=v1,v2");
  const auto name = spec.substr(0, eq);
  if (name != "alpha" && name != "beta" && name != "gamma" && name != "epsilon")
    throw ParseError("sweep: unknown parameter '" + name + "' (expected alpha, beta, gamma or epsilon)");
  std::vector<double> values;
  std::stringstream ss(spec.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParseError("sweep: '" + item + "' is not a number in axis '" + name + "'");
    }
  }
  if (values.empty()) throw ParseError("sweep: axis '" + name + "' has no values");
  return {name, values};
}

int cmd_sweep(const CommonFlags& f, const std::string& dataset_path, const std::vector<std::string>& grid_specs,
              const std::string& out_dir) {
  const auto base = resolve_config(f);
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  for (const auto& s : grid_specs) axes.push_back(parse_grid_axis(s));
  if (axes.empty()) throw ParseError("sweep: at least one --grid axis is required");

  // Expand the cartesian product and validate every cell before running any.
  std::vector<std::pair<Config, nlohmann::json>> cells{{base, nlohmann::json::object()}};
  for (const auto& [name, values] : axes) {
    std::vector<std::pair<Config, nlohmann::json>> next;
    for (const auto& [cfg, label] : cells)
      for (double v : values) {
        Config c = cfg;
        if (name == "alpha") c.diffusion.alpha = v;
        else if (name == "beta") c.diffusion.beta = v;
        else if (name == "gamma") c.diffusion.gamma = v;
        else c.epsilon = v;
        try {
          c.validate();
        } catch (const Error& e) {
          throw ParseError("sweep: " + name + "=" + std::to_string(v) + " rejected: " + e.what());
        }
        auto l = label;
        l[name] = v;
        next.emplace_back(std::move(c), std::move(l));
      }
    cells = std::move(next);
  }

  const auto dataset = load_queries(dataset_path);
  auto p = make_providers(base);
  const auto index = LoadedIndex::load(base.index_dir);
  Extractor extractor(*p.chat);
  std::vector<nlohmann::json> rows;
  for (const auto& [cfg, label] : cells) {
    Retriever retriever(index, extractor, *p.embedder, RetrievalOptions::from(cfg));
    const auto run = run_eval(index, retriever, extractor, dataset, EvalOptions::from(cfg));
    nlohmann::json row{{"params", label}, {"report", eval::to_json(run.report)}};
    if (f.json) std::cout << row.dump() << '\n';
    else print_report_row(label.dump(), run.report);
    rows.push_back(std::move(row));
  }
  const fs::path dir = out_dir.empty() ? fs::path(base.output_dir) : fs::path(out_dir);
  write_lines(dir / "sweep.jsonl", rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memory-graph retrieval: indexing, fact-anchored diffusion retrieval and evaluation"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
    sub->add_flag("--mock", flags.mock, "use the deterministic mock LLM and embedder");
    sub->add_flag("--json", flags.json, "print machine-readable records instead of tables");
  };
  auto add_query_flags = [&](CLI::App* sub) {
    sub->add_option("--k", flags.k, "number of evidence passages (default from config)");
    sub->add_option("--epsilon", flags.epsilon, "fusion weight on the diffusion score, in [0, 1]");
  };

  bool force = false;
  auto* index = app.add_subcommand("index", "build the knowledge graph and vector indexes");
  add_common(index);
  index->add_flag("--force", force, "ignore the extraction checkpoint and rebuild");

  auto* stats = app.add_subcommand("stats", "print graph statistics");
  add_common(stats);

  std::string question;
  bool explain = false;
  auto* retrieve = app.add_subcommand("retrieve", "retrieve evidence for a question");
  add_common(retrieve);
  add_query_flags(retrieve);
  retrieve->add_option("question", question, "question text")->required();
  retrieve->add_flag("--explain", explain, "include activations, top facts and score tables");

  auto* answer = app.add_subcommand("answer", "retrieve evidence and generate an answer");
  add_common(answer);
  add_query_flags(answer);
  answer->add_option("question", question, "question text")->required();
  answer->add_flag("--explain", explain, "include activations, top facts and score tables");

  auto* explain_cmd = app.add_subcommand("explain", "retrieve with the full diffusion and scoring trace");
  add_common(explain_cmd);
  add_query_flags(explain_cmd);
  explain_cmd->add_option("question", question, "question text")->required();

  std::string dataset;
  std::string out_dir;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate EM / F1 / Recall@K over a dataset");
  add_common(eval_cmd);
  add_query_flags(eval_cmd);
  eval_cmd->add_option("--dataset", dataset, "JSONL question file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", out_dir, "output directory (default: config output_dir)");

  std::vector<std::string> grid;
  auto* sweep = app.add_subcommand("sweep", "evaluate a grid over alpha, beta, gamma, epsilon");
  add_common(sweep);
  add_query_flags(sweep);
  sweep->add_option("--dataset", dataset, "JSONL question file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--grid", grid, "axis spec such as epsilon=0,0.5,1 (repeatable)")->required();
  sweep->add_option("--out", out_dir, "output directory (default: config output_dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*index) return cmd_index(flags, force);
    if (*stats) return cmd_stats(flags);
    if (*retrieve) return cmd_retrieve(flags, question, explain, false);
    if (*answer) return cmd_retrieve(flags, question, explain, true);
    if (*explain_cmd) return cmd_retrieve(flags, question, true, false);
    if (*eval_cmd) return cmd_eval(flags, dataset, out_dir);
    if (*sweep) return cmd_sweep(flags, dataset, grid, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
