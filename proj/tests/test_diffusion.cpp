#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "gistgraph/diffusion.hpp"
#include "support/oracles.hpp"

using namespace gistgraph;

namespace {

Passage psg(const std::string& id) { return {id, id, 0, id}; }
MemoryRecord mem(const std::string& pid) { return {memory_id_for(pid), pid, "", "m " + pid}; }
Triple tri(const std::string& h, const std::string& t, const std::string& pid) { return {h, "r", t, memory_id_for(pid)}; }

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

std::vector<double> dense_solution(const DiffusionGraph& dg, const std::vector<double>& pi0, double gamma) {
  const auto w = oracle::dense_transition(dg);
  Eigen::VectorXd p0(static_cast<Eigen::Index>(pi0.size()));
  for (std::size_t i = 0; i < pi0.size(); ++i) p0(static_cast<Eigen::Index>(i)) = pi0[i];
  const auto x = oracle::rwr_solve(w, p0, gamma);
  return {x.data(), x.data() + x.size()};
}

// Knowledge graph with facts f0 (a-b in p1), f1 (a-c in p1), f2 (c-d in p2).
KnowledgeGraph small_kg() {
  return build_graph({psg("p1"), psg("p2")}, {mem("p1"), mem("p2")},
                     {tri("a", "b", "p1"), tri("a", "c", "p1"), tri("c", "d", "p2")});
}

}  // namespace

TEST(FrequencyReward, Values) {
  EXPECT_DOUBLE_EQ(frequency_reward(0, 2.0, 1.0), 1.0);
  EXPECT_NEAR(frequency_reward(1, 2.0, 1.0), 2.26424, 1e-4);
  EXPECT_NEAR(frequency_reward(1, 2.0, 1.0), 1.0 + 2.0 * (1.0 - 1.0 / std::exp(1.0)), 1e-15);
  // Strictly below 1 + alpha while e^-c is still visible in a double; never above it.
  EXPECT_LT(frequency_reward(30, 2.0, 1.0), 3.0);
  EXPECT_GT(frequency_reward(30, 2.0, 1.0), 3.0 - 1e-9);
  EXPECT_LE(frequency_reward(1000, 2.0, 1.0), 3.0);
  for (std::size_t c = 0; c < 30; ++c) {
    EXPECT_LT(frequency_reward(c, 2.0, 0.3), frequency_reward(c + 1, 2.0, 0.3));
    EXPECT_LT(frequency_reward(c, 2.0, 0.3), 3.0);
  }
}

TEST(EntityFactScore, MeanOverHits) {
  const auto kg = small_kg();
  const std::vector<ScoredId> topk{{"fact-00000000", 0.9}, {"fact-00000001", 0.7}, {"fact-00000002", 0.4}};
  EXPECT_NEAR(entity_fact_score("a", topk, kg), 0.8, 1e-12);
  EXPECT_NEAR(entity_fact_score("b", topk, kg), 0.9, 1e-12);
  EXPECT_NEAR(entity_fact_score("c", topk, kg), 0.55, 1e-12);
  EXPECT_DOUBLE_EQ(entity_fact_score("zzz", topk, kg), 0.0);
  const std::vector<ScoredId> only_f2{{"fact-00000002", 0.4}};
  EXPECT_DOUBLE_EQ(entity_fact_score("a", only_f2, kg), 0.0);
}

TEST(EntityFactScore, OrderInvariant) {
  const auto kg = small_kg();
  std::vector<ScoredId> topk{{"fact-00000000", 0.9}, {"fact-00000001", 0.7}, {"fact-00000002", 0.4}};
  const double base = entity_fact_score("c", topk, kg);
  std::sort(topk.begin(), topk.end(), [](auto& x, auto& y) { return x.id > y.id; });
  EXPECT_EQ(entity_fact_score("c", topk, kg), base);
}

TEST(EntityActivation, Formula) {
  EXPECT_NEAR(entity_activation(0.8, 2.0, 4), 0.4, 1e-15);
  EXPECT_NEAR(entity_activation(0.8, 2.0, 0), 1.6, 1e-15);
  EXPECT_NEAR(entity_activation(0.8, 2.0, 1), 1.6, 1e-15);
}

TEST(InitialActivation, MatchesHandComputation) {
  const auto kg = small_kg();
  const auto dg = build_diffusion_graph(kg);
  const std::vector<ScoredId> topk{{"fact-00000000", 0.9}, {"fact-00000001", 0.7}};
  DiffusionParams p;
  const auto a = initial_activation(topk, kg, dg, p);
  ASSERT_FALSE(a.no_anchor);
  // a: mean 0.8, 2 hits, n=1; b: 0.9, 1 hit, n=1; c: 0.7, 1 hit, n=2.
  const double ra = 0.8 * frequency_reward(2, 2, 1);
  const double rb = 0.9 * frequency_reward(1, 2, 1);
  const double rc = 0.7 * frequency_reward(1, 2, 1) / 2;
  const double total = ra + rb + rc;
  EXPECT_NEAR(a.values[*dg.find("a")], ra / total, 1e-12);
  EXPECT_NEAR(a.values[*dg.find("b")], rb / total, 1e-12);
  EXPECT_NEAR(a.values[*dg.find("c")], rc / total, 1e-12);
  EXPECT_EQ(a.values[*dg.find("d")], 0.0);
  EXPECT_EQ(a.values[*dg.find("p1")], 0.0);
  EXPECT_NEAR(std::accumulate(a.values.begin(), a.values.end(), 0.0), 1.0, 1e-12);
  EXPECT_EQ(a.seeds.size(), 3u);
}

TEST(InitialActivation, SymmetricEntitiesShareMass) {
  const auto kg = build_graph({psg("p")}, {mem("p")}, {tri("x", "y", "p")});
  const auto dg = build_diffusion_graph(kg);
  const auto a = initial_activation(std::vector<ScoredId>{{"fact-00000000", 0.6}}, kg, dg, {});
  EXPECT_NEAR(a.values[*dg.find("x")], 0.5, 1e-12);
  EXPECT_NEAR(a.values[*dg.find("y")], 0.5, 1e-12);
}

TEST(InitialActivation, NoAnchorWhenAllScoresZero) {
  const auto kg = small_kg();
  const auto dg = build_diffusion_graph(kg);
  EXPECT_TRUE(initial_activation({}, kg, dg, {}).no_anchor);
  const auto a = initial_activation(std::vector<ScoredId>{{"fact-00000000", 0.0}}, kg, dg, {});
  EXPECT_TRUE(a.no_anchor);
}

TEST(Diffuse, TwoNodeClosedForm) {
  const auto dg = DiffusionGraph::from_edges({"a", "b"}, 1, {{0, 1, 1.0}});
  const auto r = diffuse(std::vector<double>{1.0, 0.0}, dg, {});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.values[0], 2.0 / 3.0, 1e-6);
  EXPECT_NEAR(r.values[1], 1.0 / 3.0, 1e-6);
}

TEST(Diffuse, UniformOnRegularGraphIsFixed) {
  // 6-cycle: every node has degree 2.
  std::vector<DiffusionGraph::Edge> edges;
  for (std::size_t i = 0; i < 6; ++i) edges.push_back({i, (i + 1) % 6, 1.0});
  const auto dg = DiffusionGraph::from_edges({"n0", "n1", "n2", "n3", "n4", "n5"}, 3, edges);
  const std::vector<double> u(6, 1.0 / 6.0);
  const auto r = diffuse(u, dg, {});
  for (double v : r.values) EXPECT_NEAR(v, 1.0 / 6.0, 1e-12);
}

TEST(Diffuse, HighRestartStaysNearSeed) {
  std::mt19937 rng(31);
  DiffusionParams p;
  p.gamma = 0.99;
  for (int t = 0; t < 30; ++t) {
    const auto g = oracle::random_graph(rng, 80);
    const auto dg = DiffusionGraph::from_edges(g.nodes, g.num_entities, g.edges);
    EXPECT_LT(l1(diffuse(g.pi0, dg, p).values, g.pi0), 0.05);
  }
}

TEST(Diffuse, MatchesDenseSolveOnRandomGraphs) {
  std::mt19937 rng(41);
  for (int t = 0; t < 30; ++t) {
    const auto g = oracle::random_graph(rng);
    const auto dg = DiffusionGraph::from_edges(g.nodes, g.num_entities, g.edges);
    for (double gamma : {0.15, 0.5, 0.85}) {
      DiffusionParams p;
      p.gamma = gamma;
      p.max_iters = 2000;
      p.tol = 1e-12;
      const auto r = diffuse(g.pi0, dg, p);
      const auto want = dense_solution(dg, g.pi0, gamma);
      double linf = 0;
      for (std::size_t i = 0; i < want.size(); ++i) linf = std::max(linf, std::abs(r.values[i] - want[i]));
      EXPECT_LT(linf, 1e-6);
    }
  }
}

TEST(Diffuse, DenseTransitionAgreesWithEdgeListRebuild) {
  std::mt19937 rng(43);
  for (int t = 0; t < 10; ++t) {
    const auto g = oracle::random_graph(rng, 60);
    const auto dg = DiffusionGraph::from_edges(g.nodes, g.num_entities, g.edges);
    const auto a = oracle::dense_transition(dg);
    const auto b = oracle::dense_transition(g.nodes.size(), g.edges);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Diffuse, MassIsConservedEveryIteration) {
  std::mt19937 rng(47);
  for (int t = 0; t < 30; ++t) {
    const auto g = oracle::random_graph(rng);
    const auto dg = DiffusionGraph::from_edges(g.nodes, g.num_entities, g.edges);
    double worst = 0;
    diffuse(g.pi0, dg, {}, [&](std::size_t, std::span<const double> x) {
      worst = std::max(worst, std::abs(std::accumulate(x.begin(), x.end(), 0.0) - 1.0));
    });
    EXPECT_LT(worst, 1e-9);
  }
}

TEST(Diffuse, SuccessiveChangesContract) {
  std::mt19937 rng(53);
  for (int t = 0; t < 20; ++t) {
    const auto g = oracle::random_graph(rng);
    const auto dg = DiffusionGraph::from_edges(g.nodes, g.num_entities, g.edges);
    std::vector<double> prev = g.pi0;
    std::vector<double> deltas;
    diffuse(g.pi0, dg, {}, [&](std::size_t, std::span<const double> x) {
      std::vector<double> cur(x.begin(), x.end());
      deltas.push_back(l1(cur, prev));
      prev = std::move(cur);
    });
    for (std::size_t i = 2; i < deltas.size(); ++i) {
      EXPECT_LE(deltas[i], deltas[i - 1] * (1 - 0.5) + 1e-15);
    }
  }
}

TEST(Diffuse, SeedScaleInvariance) {
  std::mt19937 rng(59);
  const auto g = oracle::random_graph(rng, 100);
  const auto dg = DiffusionGraph::from_edges(g.nodes, g.num_entities, g.edges);
  const auto base = diffuse(g.pi0, dg, {}).values;
  for (double c : {0.001, 3.0, 1e5}) {
    auto scaled = g.pi0;
    double total = 0;
    for (auto& v : scaled) total += (v *= c);
    for (auto& v : scaled) v /= total;
    const auto r = diffuse(scaled, dg, {}).values;
    for (std::size_t i = 0; i < base.size(); ++i) EXPECT_NEAR(r[i], base[i], 1e-12);
  }
}

TEST(Diffuse, NonConvergenceIsFlagged) {
  const auto dg = DiffusionGraph::from_edges({"a", "b"}, 1, {{0, 1, 1.0}});
  DiffusionParams p;
  p.max_iters = 3;
  const auto r = diffuse(std::vector<double>{1.0, 0.0}, dg, p);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 3u);
  EXPECT_NEAR(std::accumulate(r.values.begin(), r.values.end(), 0.0), 1.0, 1e-12);
}

TEST(Diffuse, ParameterValidation) {
  const auto dg = DiffusionGraph::from_edges({"a", "b"}, 1, {{0, 1, 1.0}});
  DiffusionParams p;
  p.gamma = 1.0;
  EXPECT_THROW(diffuse(std::vector<double>{1.0, 0.0}, dg, p), InvalidArgument);
  p = {};
  p.beta = 0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  EXPECT_THROW(diffuse(std::vector<double>{1.0}, dg, {}), InvalidArgument);
}

TEST(PassageScores, SinglePassageTakesAllPassageMass) {
  const auto kg = build_graph({psg("p")}, {mem("p")}, {}, {{memory_id_for("p"), {{"E", "e"}}}});
  const auto dg = build_diffusion_graph(kg);
  std::vector<double> pi0(dg.size(), 0.0);
  pi0[*dg.find("e")] = 1.0;
  const auto r = diffuse(pi0, dg, {});
  const auto s = passage_diffusion_scores(r.values, dg);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_NEAR(s.at("p"), 1.0 - r.values[*dg.find("e")], 1e-12);
}

TEST(PassageScores, SymmetricPassagesTie) {
  const auto kg = build_graph({psg("p"), psg("q")}, {mem("p"), mem("q")}, {},
                              {{memory_id_for("p"), {{"E", "e"}}}, {memory_id_for("q"), {{"E", "e"}}}});
  const auto dg = build_diffusion_graph(kg);
  std::vector<double> pi0(dg.size(), 0.0);
  pi0[*dg.find("e")] = 1.0;
  const auto s = passage_diffusion_scores(diffuse(pi0, dg, {}).values, dg);
  EXPECT_NEAR(s.at("p"), s.at("q"), 1e-15);
}

TEST(PassageScores, PlantedPathFavoursTheCloserPassage) {
  // seed - x1 - A (two hops); seed - y1 - y2 - y3 - B (four hops).
  std::vector<std::string> nodes{"seed", "x1", "y1", "y2", "y3", "A", "B"};
  const auto dg = DiffusionGraph::from_edges(nodes, 5,
                                             {{0, 1, 1}, {0, 2, 1}, {2, 3, 1}, {3, 4, 1}, {1, 5, 1}, {4, 6, 1}});
  std::vector<double> pi0(nodes.size(), 0.0);
  pi0[0] = 1.0;
  const auto got = passage_diffusion_scores(diffuse(pi0, dg, {}).values, dg);
  const auto want = dense_solution(dg, pi0, 0.5);
  EXPECT_NEAR(got.at("A"), want[5], 1e-9);
  EXPECT_NEAR(got.at("B"), want[6], 1e-9);
  EXPECT_GT(want[5], want[6]);
  EXPECT_GT(got.at("A"), got.at("B"));
}
