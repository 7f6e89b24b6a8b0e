#pragma once

// Planted synthetic corpus for end-to-end tests under the mock provider.
//
// Every passage is prose whose capitalized words are exactly the intended
// entity names, followed by `head | relation | tail` lines. Question clusters
// use vocabulary no other cluster shares, so the planted gold passages are
// reachable through their own facts. Only gold passages carry answer markers,
// and for comparative questions only the winner's passage does.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "gistgraph/corpus.hpp"

namespace synth {

struct PlantedTriple {
  std::string head;
  std::string relation;
  std::string tail;
};

struct PlantedPassage {
  std::string doc_id;
  std::string text;
  std::set<std::string> entities;  // lowercase names NER and triples must yield
  std::vector<PlantedTriple> triples;
};

struct Truth {
  std::size_t entities = 0;
  std::size_t relations = 0;
  std::size_t facts = 0;
  std::size_t passages = 0;
  std::size_t entity_entity_edges = 0;
  std::size_t entity_passage_edges = 0;
  std::size_t memory_entity_links = 0;
};

struct Corpus {
  std::vector<PlantedPassage> passages;
  std::vector<gistgraph::Document> documents;
  std::vector<gistgraph::QAExample> questions;  // single-hop first, then comparative
  Truth truth;
};

inline std::string lower(std::string s) {
  for (auto& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

class Namer {
 public:
  explicit Namer(std::uint32_t seed) : rng_(seed) {}

  // Capitalized pseudo-word of three syllables, unique across the corpus.
  std::string word() {
    static const char* syl[] = {"ka", "lo", "ven", "dra", "mi", "tor", "sel", "bru", "qua", "nix",
                                "pel", "ro", "ste", "vi", "gal", "dun", "fe", "ri", "mon", "tha",
                                "zor", "ul", "bek", "sa", "jin", "wol", "ny", "tes", "hap", "gri"};
    constexpr std::size_t n = sizeof syl / sizeof syl[0];
    for (;;) {
      std::string w;
      for (int i = 0; i < 3; ++i) w += syl[rng_() % n];
      w[0] = static_cast<char>(w[0] - 'a' + 'A');
      if (used_.insert(w).second) return w;
    }
  }

  std::string person() { return word() + " " + word(); }
  std::uint32_t pick(std::uint32_t n) { return rng_() % n; }

 private:
  std::mt19937 rng_;
  std::set<std::string> used_;
};

inline void add_triple(PlantedPassage& p, const std::string& h, const std::string& r, const std::string& t) {
  p.triples.push_back({h, r, t});
  p.entities.insert(lower(h));
  p.entities.insert(lower(t));
}

inline Truth compute_truth(const std::vector<PlantedPassage>& passages) {
  Truth t;
  std::set<std::string> entities;
  std::set<std::string> relations;
  std::set<std::pair<std::string, std::string>> pairs;
  std::map<std::string, std::set<std::string>> entity_passages;
  for (const auto& p : passages) {
    std::set<std::tuple<std::string, std::string, std::string>> local;
    for (const auto& tr : p.triples) {
      const auto h = lower(tr.head), tl = lower(tr.tail);
      if (!local.emplace(h, tr.relation, tl).second) continue;
      ++t.facts;
      relations.insert(tr.relation);
      if (h != tl) pairs.insert(std::minmax(h, tl));
    }
    for (const auto& e : p.entities) {
      entities.insert(e);
      entity_passages[e].insert(p.doc_id);
    }
    t.memory_entity_links += p.entities.size();
  }
  t.entities = entities.size();
  t.relations = relations.size();
  t.passages = passages.size();
  t.entity_entity_edges = pairs.size();
  for (const auto& [_, ps] : entity_passages) t.entity_passage_edges += ps.size();
  return t;
}

inline std::string passage_id(const std::string& doc_id) { return doc_id + "#0"; }

/// 10 single-hop and 10 comparative questions over `n_passages` passages (at least 60).
inline Corpus generate(std::size_t n_passages = 200, std::uint32_t seed = 7) {
  Namer namer(seed);
  Corpus c;
  auto next_doc = [&] {
    char buf[16];
    std::snprintf(buf, sizeof buf, "syn-%04zu", c.passages.size());
    PlantedPassage p;
    p.doc_id = buf;
    return p;
  };

  std::vector<std::string> academies;
  for (int i = 0; i < 8; ++i) academies.push_back("Academy " + namer.word());
  auto academy = [&] { return academies[namer.pick(static_cast<std::uint32_t>(academies.size()))]; };

  // A person's second passage: schooling at a shared academy under a private teacher.
  auto schooling = [&](const std::string& person) {
    auto p = next_doc();
    const auto a = academy();
    const auto teacher = namer.person();
    p.text = person + " studied painting at " + a + " under " + teacher + ".";
    p.entities.insert(lower(person));
    add_triple(p, person, "educated at", a);
    add_triple(p, person, "student of", teacher);
    c.passages.push_back(std::move(p));
  };

  for (int q = 0; q < 10; ++q) {
    const auto person = namer.person();
    const auto city = namer.word();
    auto p = next_doc();
    p.text = person + " grew up near the river. " + person + " was born in [ANS]" + city + "[/ANS].";
    p.entities.insert(lower(person));
    add_triple(p, person, "born in", city);
    const auto gold = passage_id(p.doc_id);
    c.passages.push_back(std::move(p));
    schooling(person);
    c.questions.push_back({"Where was " + person + " born?", {city}, {gold}});
  }

  for (int q = 0; q < 10; ++q) {
    const std::string people[2] = {namer.person(), namer.person()};
    const int years[2] = {1700 + 2 * q, 1701 + 2 * q + static_cast<int>(namer.pick(40)) * 20};
    const int winner = static_cast<int>(namer.pick(2));
    // Swap so the later-born person sits on either side of the question.
    const int later = years[0] > years[1] ? 0 : 1;
    const int order[2] = {later == winner ? 0 : 1, later == winner ? 1 : 0};
    std::vector<std::string> golds;
    for (int side = 0; side < 2; ++side) {
      const int i = order[side];
      auto p = next_doc();
      const auto& who = people[i];
      const auto year = std::to_string(years[i]);
      const auto named = i == later ? "[ANS]" + who + "[/ANS]" : who;
      p.text = who + " was a painter. " + named + " was born in " + year + ".";
      p.entities.insert(lower(who));
      p.entities.insert(year);
      add_triple(p, who, "born in", year);
      golds.push_back(passage_id(p.doc_id));
      c.passages.push_back(std::move(p));
      schooling(who);
    }
    c.questions.push_back({"Who was born later, " + people[order[0]] + " or " + people[order[1]] + "?",
                           {people[later]},
                           golds});
  }

  std::vector<std::string> traders;
  for (int i = 0; i < 60; ++i) traders.push_back(namer.person());
  while (c.passages.size() < n_passages) {
    auto p = next_doc();
    const auto& a = traders[namer.pick(60)];
    auto b = traders[namer.pick(60)];
    while (b == a) b = traders[namer.pick(60)];
    p.text = a + " traded wool with " + b + ".";
    p.entities.insert(lower(a));
    p.entities.insert(lower(b));
    add_triple(p, a, "traded with", b);
    if (namer.pick(4) == 0) {
      const auto ac = academy();
      p.text += " " + a + " lectured at " + ac + ".";
      add_triple(p, a, "lectured at", ac);
    }
    c.passages.push_back(std::move(p));
  }

  for (auto& p : c.passages) {
    for (const auto& t : p.triples) p.text += "\n" + t.head + " | " + t.relation + " | " + t.tail;
    c.documents.push_back({p.doc_id, "", p.text});
  }
  c.truth = compute_truth(c.passages);
  return c;
}

}  // namespace synth
