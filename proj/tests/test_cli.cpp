#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "support/fixtures.hpp"
#include "support/run.hpp"
#include "support/synthetic.hpp"

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    corpus_ = synth::generate(60);
    fixture::write_jsonl_docs(dir_ / "corpus.jsonl", corpus_.documents);
    fixture::write_jsonl_questions(dir_ / "questions.jsonl", corpus_.questions);
    fixture::write_file(dir_ / "config.json", nlohmann::json{{"corpus", "corpus.jsonl"},
                                                             {"index_dir", "index"},
                                                             {"output_dir", "out"},
                                                             {"provider", {{"mode", "mock"}}},
                                                             {"embedder", {{"mode", "mock"}}}}
                                                  .dump());
  }

  run::Result cli(const std::string& args) const {
    return run::shell(run::quote(GISTGRAPH_CLI_PATH) + " " + args);
  }
  std::string config() const { return "--config " + run::quote((dir_ / "config.json").string()); }
  std::string dataset() const { return "--dataset " + run::quote((dir_ / "questions.jsonl").string()); }

  nlohmann::json json_line(const run::Result& r) const {
    EXPECT_EQ(r.exit_code, 0) << r.out;
    return nlohmann::json::parse(r.out.substr(0, r.out.find('\n')));
  }

  void index() const { ASSERT_EQ(cli("index " + config()).exit_code, 0); }

  fixture::TempDir dir_;
  synth::Corpus corpus_;
};

}  // namespace

TEST_F(Cli, IndexAndStatsReportTheSameCounts) {
  const auto built = json_line(cli("index --json " + config()));
  EXPECT_EQ(built["entities"], corpus_.truth.entities);
  EXPECT_EQ(built["facts"], corpus_.truth.facts);
  EXPECT_EQ(built["passages"], 60);
  EXPECT_EQ(json_line(cli("stats --json " + config())), built);
  const auto table = cli("stats " + config());
  EXPECT_NE(table.out.find("entity-passage edges"), std::string::npos);
}

TEST_F(Cli, RetrieveAndAnswer) {
  index();
  const auto& q = corpus_.questions[0];
  const auto r = json_line(cli("retrieve --json " + config() + " " + run::quote(q.question)));
  ASSERT_EQ(r["passages"].size(), 5u);
  EXPECT_EQ(r["passages"][0]["passage_id"], q.gold_passage_ids[0]);
  const auto a = json_line(cli("answer --json " + config() + " " + run::quote(q.question)));
  EXPECT_EQ(a["answer"], q.gold_answers[0]);
  const auto k3 = json_line(cli("retrieve --json --k 3 " + config() + " " + run::quote(q.question)));
  EXPECT_EQ(k3["passages"].size(), 3u);
  const auto ex = json_line(cli("explain --json " + config() + " " + run::quote(q.question)));
  EXPECT_FALSE(ex["explain"][0]["seeds"].empty());
}

TEST_F(Cli, EvalWritesReportAndTraces) {
  index();
  const auto rep = json_line(cli("eval --json " + config() + " " + dataset()));
  EXPECT_EQ(rep["n"], 20);
  EXPECT_DOUBLE_EQ(rep["em"].get<double>(), 100.0);
  EXPECT_DOUBLE_EQ(rep["recall_at"]["5"].get<double>(), 100.0);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "out/report.jsonl"));
  const auto traces = fixture::read_file(dir_ / "out/traces.jsonl");
  EXPECT_EQ(std::count(traces.begin(), traces.end(), '\n'), 20);
}

TEST_F(Cli, SweepRunsEveryCell) {
  index();
  const auto r = cli("sweep --json " + config() + " " + dataset() + " --grid epsilon=0.5,1");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const auto rows = fixture::read_file(dir_ / "out/sweep.jsonl");
  ASSERT_EQ(std::count(rows.begin(), rows.end(), '\n'), 2);
  const auto first = nlohmann::json::parse(rows.substr(0, rows.find('\n')));
  EXPECT_DOUBLE_EQ(first["params"]["epsilon"].get<double>(), 0.5);
  EXPECT_EQ(first["report"]["n"], 20);
}

TEST_F(Cli, SweepRejectsBadValuesBeforeRunning) {
  index();
  for (const std::string grid : {"epsilon=0.5,2", "gamma=0", "alpha=x", "zeta=1"}) {
    const auto r = cli("sweep " + config() + " " + dataset() + " --grid " + grid);
    EXPECT_EQ(r.exit_code, 1) << grid;
    EXPECT_NE(r.out.find("error: sweep"), std::string::npos) << r.out;
    EXPECT_FALSE(std::filesystem::exists(dir_ / "out/sweep.jsonl")) << grid;
  }
}

TEST_F(Cli, EpsilonEndpointsFollowOneSignal) {
  index();
  const auto q = run::quote(corpus_.questions[3].question);
  const auto by_diff = json_line(cli("retrieve --json --epsilon 1 " + config() + " " + q));
  const auto by_sim = json_line(cli("retrieve --json --epsilon 0 " + config() + " " + q));
  for (std::size_t i = 1; i < 5; ++i) {
    EXPECT_GE(by_diff["passages"][i - 1]["s_diff"].get<double>(), by_diff["passages"][i]["s_diff"].get<double>());
    EXPECT_GE(by_sim["passages"][i - 1]["s_sim"].get<double>(), by_sim["passages"][i]["s_sim"].get<double>());
  }
  const auto mid = json_line(cli("explain --json --epsilon 0.5 " + config() + " " + q));
  for (const auto& row : mid["explain"][0]["ranked"])
    EXPECT_NEAR(row["s_fused"].get<double>(),
                0.5 * row["norm_diff"].get<double>() + 0.5 * row["norm_sim"].get<double>(), 1e-12);
}

TEST_F(Cli, ErrorsAreReportedWithExitCodeOne) {
  const auto missing = cli("retrieve " + config() + " 'anything?'");
  EXPECT_EQ(missing.exit_code, 1);
  EXPECT_NE(missing.out.find("run the `index` command"), std::string::npos) << missing.out;
  EXPECT_NE(cli("retrieve --epsilon 3 " + config() + " 'x?'").exit_code, 0);
  EXPECT_NE(cli("nonsense").exit_code, 0);
  EXPECT_NE(cli("index --config /no/such/file.json").exit_code, 0);
}
