#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gistgraph/gistgraph.hpp"

namespace fixture {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("gistgraph-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Provider answering through a callback and counting calls.
class ScriptedProvider final : public gistgraph::ChatProvider {
 public:
  using Fn = std::function<std::string(const gistgraph::ChatRequest&)>;
  explicit ScriptedProvider(Fn fn) : fn_(std::move(fn)) {}
  std::string complete(const gistgraph::ChatRequest& req) const override {
    ++calls_;
    return fn_(req);
  }
  int calls() const { return calls_.load(); }

 private:
  Fn fn_;
  mutable std::atomic<int> calls_{0};
};

/// Mock provider that counts calls per task.
class CountingMock final : public gistgraph::ChatProvider {
 public:
  std::string complete(const gistgraph::ChatRequest& req) const override {
    ++calls_;
    return inner_.complete(req);
  }
  int calls() const { return calls_.load(); }

 private:
  gistgraph::MockChatProvider inner_;
  mutable std::atomic<int> calls_{0};
};

inline std::vector<gistgraph::Document> write_jsonl_docs(const std::filesystem::path& p,
                                                         const std::vector<gistgraph::Document>& docs) {
  std::ofstream out(p, std::ios::trunc);
  for (const auto& d : docs) out << nlohmann::json{{"id", d.doc_id}, {"title", d.title}, {"text", d.text}}.dump() << '\n';
  return docs;
}

inline void write_jsonl_questions(const std::filesystem::path& p, const std::vector<gistgraph::QAExample>& qs) {
  std::ofstream out(p, std::ios::trunc);
  for (const auto& q : qs)
    out << nlohmann::json{{"question", q.question}, {"answers", q.gold_answers}, {"gold_passage_ids", q.gold_passage_ids}}
               .dump()
        << '\n';
}

/// Indexes `docs` with the mock provider and embedder into `dir` and loads the result.
inline gistgraph::LoadedIndex mock_index(const std::vector<gistgraph::Document>& docs,
                                         const std::filesystem::path& dir, bool force = true) {
  gistgraph::MockChatProvider provider;
  gistgraph::MockEmbedder embedder;
  gistgraph::IndexOptions opt;
  opt.force = force;
  gistgraph::Indexer(provider, embedder, opt).run(docs, dir);
  return gistgraph::LoadedIndex::load(dir);
}

}  // namespace fixture
