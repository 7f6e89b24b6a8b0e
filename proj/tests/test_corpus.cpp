#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "gistgraph/corpus.hpp"
#include "gistgraph/text.hpp"
#include "support/fixtures.hpp"

using namespace gistgraph;

namespace {

std::string words(std::size_t n, const std::string& stem) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += stem + std::to_string(i);
  }
  return s;
}

std::size_t brute_count(const std::string& s) {
  std::size_t n = 0;
  bool in = false;
  for (char c : s) {
    const bool space = c == ' ' || c == '\n' || c == '\t' || c == '\r';
    if (!space && !in) ++n;
    in = !space;
  }
  return n;
}

}  // namespace

TEST(Segment, ThreeSmallParagraphsPackGreedily) {
  Document d{"d", "", "alpha beta.\n\ngamma delta.\n\nepsilon."};
  const auto ps = segment(d, 32);
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_EQ(ps[0].text, "alpha beta.\n\ngamma delta.\n\nepsilon.");
}

TEST(Segment, ThreeParagraphsThatEachFillABudget) {
  const auto p = words(30, "w");
  Document d{"d", "", p + "\n\n" + p + "\n\n" + p};
  const auto ps = segment(d, 32);
  ASSERT_EQ(ps.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(ps[i].text, p);
    EXPECT_EQ(ps[i].ordinal, i);
    EXPECT_EQ(ps[i].passage_id, "d#" + std::to_string(i));
  }
}

TEST(Segment, SingleWordIsIdentity) {
  Document d{"d", "", "hello"};
  const auto ps = segment(d, 32);
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_EQ(ps[0].text, "hello");
}

TEST(Segment, ThousandTokensAtParagraphBoundaries) {
  std::vector<std::string> paras;
  for (int i = 0; i < 4; ++i) paras.push_back(words(250, "p" + std::to_string(i) + "_"));
  Document d{"doc", "", paras[0] + "\n\n" + paras[1] + "\n\n" + paras[2] + "\n\n" + paras[3]};
  ASSERT_EQ(brute_count(d.text), 1000u);
  const auto ps = segment(d, 300);
  ASSERT_EQ(ps.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_LE(brute_count(ps[i].text), 300u);
    EXPECT_EQ(ps[i].text, paras[i]);
  }
}

TEST(Segment, OversizedParagraphFallsBackToSentences) {
  std::string para;
  for (int s = 0; s < 6; ++s) para += words(20, "s" + std::to_string(s) + "_") + ". ";
  Document d{"d", "", para};
  const auto ps = segment(d, 50);
  ASSERT_EQ(ps.size(), 3u);
  for (const auto& p : ps) EXPECT_EQ(brute_count(p.text), 40u);
}

TEST(Segment, OversizedSentenceIsChunkedByTokens) {
  Document d{"d", "", words(100, "t")};
  const auto ps = segment(d, 32);
  std::size_t total = 0;
  for (const auto& p : ps) {
    EXPECT_LE(brute_count(p.text), 32u);
    total += brute_count(p.text);
  }
  EXPECT_EQ(total, 100u);
}

TEST(Segment, Errors) {
  EXPECT_THROW(segment({"d", "", "   \n "}, 64), InvalidArgument);
  EXPECT_THROW(segment({"d", "", "x"}, 31), InvalidArgument);
}

TEST(Segment, PropertiesOnRandomDocuments) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::string doc;
    const int paras = 1 + static_cast<int>(rng() % 6);
    for (int p = 0; p < paras; ++p) {
      if (p) doc += (rng() % 2) ? "\n\n" : "\n \n";
      const int sentences = 1 + static_cast<int>(rng() % 8);
      for (int s = 0; s < sentences; ++s) doc += words(1 + rng() % 60, "x") + ". ";
    }
    const std::size_t max_tokens = 32 + rng() % 100;
    Document d{"d" + std::to_string(trial), "", doc};
    const auto a = segment(d, max_tokens);
    const auto b = segment(d, max_tokens);
    ASSERT_EQ(a.size(), b.size());
    std::string joined;
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].text, b[i].text);
      EXPECT_EQ(a[i].ordinal, i);
      EXPECT_FALSE(text::trim(a[i].text).empty());
      EXPECT_LE(brute_count(a[i].text), max_tokens);
      joined += a[i].text + " ";
    }
    EXPECT_EQ(text::collapse_whitespace(joined), text::collapse_whitespace(doc));
  }
}

TEST(Segment, PreChunkedIsIdentity) {
  const auto ps = as_single_passage({"d", "t", "whatever  text\n\nhere"});
  ASSERT_EQ(ps.size(), 1u);
  EXPECT_EQ(ps[0].text, "whatever  text\n\nhere");
  EXPECT_EQ(ps[0].passage_id, "d#0");
}

TEST(LoadCorpus, TwoLinesWithIds) {
  fixture::TempDir dir;
  fixture::write_file(dir / "c.jsonl", R"({"id":"a","title":"A","text":"one"})" "\n" R"({"id":"b","text":"two"})" "\n");
  const auto docs = load_corpus((dir / "c.jsonl").string());
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].doc_id, "a");
  EXPECT_EQ(docs[0].title, "A");
  EXPECT_EQ(docs[1].doc_id, "b");
  EXPECT_EQ(docs[1].text, "two");
}

TEST(LoadCorpus, BlankTrailingLineIgnoredAndIdsDefaultToLine) {
  fixture::TempDir dir;
  fixture::write_file(dir / "c.jsonl", R"({"text":"one"})" "\n\n" R"({"text":"two"})" "\n\n");
  const auto docs = load_corpus((dir / "c.jsonl").string());
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].doc_id, "doc-1");
  EXPECT_EQ(docs[1].doc_id, "doc-3");
}

TEST(LoadCorpus, MissingTextNamesTheLine) {
  fixture::TempDir dir;
  fixture::write_file(dir / "c.jsonl", R"({"id":"a","text":"one"})" "\n" R"({"id":"b"})" "\n");
  try {
    load_corpus((dir / "c.jsonl").string());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(LoadCorpus, MalformedJsonAndDuplicates) {
  fixture::TempDir dir;
  fixture::write_file(dir / "bad.jsonl", "{not json\n");
  EXPECT_THROW(load_corpus((dir / "bad.jsonl").string()), ParseError);
  fixture::write_file(dir / "dup.jsonl", R"({"id":"a","text":"x"})" "\n" R"({"id":"a","text":"y"})" "\n");
  EXPECT_THROW(load_corpus((dir / "dup.jsonl").string()), ParseError);
  EXPECT_THROW(load_corpus((dir / "missing.jsonl").string()), Error);
}

TEST(LoadQueries, ReadsGoldIdsWhenPresent) {
  fixture::TempDir dir;
  fixture::write_file(dir / "q.jsonl", R"({"question":"q1","answers":["a"],"gold_passage_ids":["p#0"]})" "\n" R"({"question":"q2","answers":["b","c"]})" "\n");
  const auto qs = load_queries((dir / "q.jsonl").string());
  ASSERT_EQ(qs.size(), 2u);
  EXPECT_EQ(qs[0].gold_passage_ids, std::vector<std::string>{"p#0"});
  EXPECT_TRUE(qs[1].gold_passage_ids.empty());
  EXPECT_EQ(qs[1].gold_answers.size(), 2u);
}
