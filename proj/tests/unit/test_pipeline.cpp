#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "autoprov/core/jsonl.hpp"
#include "autoprov/detect/detect.hpp"
#include "autoprov/pipeline/pipeline.hpp"
#include "autoprov/synthgen/synthgen.hpp"
#include "test_util.hpp"

using namespace autoprov;
using pipeline::Stage;
namespace fs = std::filesystem;

namespace {

// A small two-attack corpus plus a config pointing at it.
fs::path make_corpus(const fs::path& dir) {
  synthgen::CorpusSpec s;
  s.formats = {"auditd", "win4663", "clf"};
  s.lines_per_format = 60;
  s.train_lines_per_format = 80;
  s.attacks = {"dropper_chain", "stealth_miner"};
  s.seed = 5;
  synthgen::write_corpus(dir / "corpus", synthgen::generate(s));
  auto conf = dir / "run.conf";
  write_text_atomic(conf, pipeline::corpus_config_text("corpus"));
  return conf;
}

std::string slurp(const fs::path& p) { return read_text(p); }

int exit_code(const std::string& cmd) {
  int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Config, SectionsQuotesOverrides) {
  auto c = pipeline::parse_config("# top\nseed = 3\n[cluster]\nradius = 0.25\nk=\"16\"\n[eval]\nrates = '0,50'\n",
                                  {"cluster.k=8", "seed=9"});
  EXPECT_EQ(c.get("cluster.radius"), "0.25");
  EXPECT_EQ(c.get_int("cluster.k", 0), 8);
  EXPECT_EQ(c.get_int("seed", 0), 9);
  EXPECT_EQ(c.get("eval.rates"), "0,50");
  EXPECT_DOUBLE_EQ(c.get_double("cluster.decay", 0.5), 0.5);
  EXPECT_THROW(pipeline::parse_config("[cluster\n"), pipeline::ConfigError);
  EXPECT_THROW(pipeline::parse_config("novalue\n"), pipeline::ConfigError);
}

TEST(Config, ValidationErrors) {
  TempDir dir;
  auto conf = make_corpus(dir.path());
  auto ok = pipeline::load_config(conf);
  EXPECT_NO_THROW(pipeline::validate(ok));
  auto with = [&](std::vector<std::string> o) { return pipeline::load_config(conf, o); };
  EXPECT_THROW(pipeline::validate(with({"cluster.bogus=1"})), pipeline::ConfigError);
  EXPECT_THROW(pipeline::validate(with({"cluster.k=abc"})), pipeline::ConfigError);
  EXPECT_THROW(pipeline::validate(with({"cluster.k=2.5"})), pipeline::ConfigError);
  EXPECT_THROW(pipeline::validate(with({"cluster.radius=0"})), pipeline::ConfigError);
  EXPECT_THROW(pipeline::validate(with({"input.test=nope.log"})), pipeline::ConfigError);
  EXPECT_THROW(pipeline::validate(with({"eval.rates=0,120"})), pipeline::ConfigError);
  EXPECT_THROW(pipeline::validate(with({"chat.endpoint=http://x"})), pipeline::ConfigError);
  auto no_seed = pipeline::parse_config(slurp(conf).substr(slurp(conf).find('\n')), {}, conf.parent_path());
  EXPECT_THROW(pipeline::validate(no_seed), pipeline::ConfigError);
}

TEST(Pipeline, ClusterStageWritesCandidatesAndCheckpoint) {
  TempDir dir;
  auto conf = make_corpus(dir.path());
  pipeline::Pipeline p(pipeline::load_config(conf));
  auto o = p.run(Stage::Cluster);
  EXPECT_FALSE(o.skipped);
  auto candidates = read_jsonl_values(p.db_dir() / "candidates.jsonl");
  auto assignments = read_jsonl_values(p.out_dir() / "assignments.jsonl");
  EXPECT_EQ(assignments.size(), 3u * 80u + 3u * 60u + 15u);
  EXPECT_GE(candidates.size(), 3u);
  EXPECT_TRUE(fs::exists(p.db_dir() / "clusters.jsonl"));
  EXPECT_EQ(read_jsonl_values(p.db_dir() / "clusters.jsonl").size(), 3u);
}

TEST(Pipeline, RulesWithoutCandidateDatabase) {
  TempDir dir;
  auto conf = make_corpus(dir.path());
  pipeline::Pipeline p(pipeline::load_config(conf));
  p.run(Stage::Cluster);
  try {
    p.run(Stage::Rules);
    FAIL() << "expected a stage error";
  } catch (const pipeline::StageError& e) {
    EXPECT_EQ(e.stage(), "rules");
    EXPECT_NE(std::string(e.what()).find("missing candidate provenance database"), std::string::npos) << e.what();
  }
}

TEST(Pipeline, ExplainEmptyAttackGraph) {
  TempDir dir;
  auto conf = make_corpus(dir.path());
  pipeline::Pipeline p(pipeline::load_config(conf));
  detect::save_attack_graph(p.out_dir() / "attack_graph.jsonl", {});
  write_text_atomic(p.db_dir() / "functionality.jsonl", "");
  try {
    p.run(Stage::Explain);
    FAIL() << "expected a stage error";
  } catch (const pipeline::StageError& e) {
    EXPECT_EQ(e.stage(), "explain");
    EXPECT_NE(std::string(e.what()).find("empty attack graph"), std::string::npos);
  }
}

TEST(Pipeline, FullRunResumeAndCorruption) {
  TempDir dir;
  auto conf = make_corpus(dir.path());
  {
    pipeline::Pipeline p(pipeline::load_config(conf));
    for (const auto& o : p.run_all()) EXPECT_FALSE(o.skipped);
    auto metrics = nlohmann::json::parse(slurp(p.out_dir() / "metrics.json"));
    EXPECT_DOUBLE_EQ(metrics.at("adp").get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(metrics.at("clustering_ari").get<double>(), 1.0);
    for (auto f : {"report.md", "summary.json", "sweep.csv", "metrics.csv", "manifest.json", "scores.csv"})
      EXPECT_TRUE(fs::exists(p.out_dir() / f)) << f;
    auto m = p.manifest();
    EXPECT_EQ(m.at("tool_version"), std::string(pipeline::kToolVersion));
    EXPECT_EQ(m.at("stages").size(), 8u);
    EXPECT_EQ(m.at("providers").at("embedding_dimension"), 256);
  }
  {
    pipeline::Pipeline p(pipeline::load_config(conf));
    for (const auto& o : p.run_all()) EXPECT_TRUE(o.skipped) << pipeline::stage_name(o.stage);
  }
  {
    // A changed config value only reruns the stages that read it.
    pipeline::Pipeline p(pipeline::load_config(conf, {"detect.n_seed=5"}));
    auto outcomes = p.run_all();
    for (const auto& o : outcomes)
      EXPECT_EQ(o.skipped, o.stage < Stage::Detect) << pipeline::stage_name(o.stage);
  }
  {
    auto edges = dir.path() / "run/out/graph_test_edges.jsonl";
    auto text = slurp(edges);
    text[text.size() / 2] ^= 0x01;
    std::ofstream(edges, std::ios::binary) << text;
    pipeline::Pipeline p(pipeline::load_config(conf));
    try {
      p.run_all();
      FAIL() << "expected a stage error";
    } catch (const pipeline::StageError& e) {
      EXPECT_EQ(e.stage(), "build");
      EXPECT_NE(std::string(e.what()).find("corrupt artifact"), std::string::npos);
    }
  }
}

TEST(Pipeline, TwoRunsAreByteIdentical) {
  TempDir a, b;
  std::vector<fs::path> roots;
  for (const auto* d : {&a, &b}) {
    auto conf = make_corpus(d->path());
    pipeline::Pipeline p(pipeline::load_config(conf));
    p.run_all();
    roots.push_back(d->path() / "run");
  }
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(roots[0])) {
    if (!e.is_regular_file()) continue;
    auto rel = fs::relative(e.path(), roots[0]);
    ASSERT_TRUE(fs::exists(roots[1] / rel)) << rel;
    EXPECT_EQ(slurp(e.path()), slurp(roots[1] / rel)) << rel;
    ++compared;
  }
  EXPECT_GE(compared, 30u);
}

TEST(Pipeline, LockRejectsConcurrentRun) {
  TempDir dir;
  auto conf = make_corpus(dir.path());
  pipeline::Pipeline p(pipeline::load_config(conf));
  EXPECT_THROW(pipeline::Pipeline(pipeline::load_config(conf)), pipeline::StageError);
}

#ifdef AUTOPROV_CLI
TEST(Cli, ExitCodes) {
  TempDir dir;
  auto conf = make_corpus(dir.path());
  std::string cli = AUTOPROV_CLI;
  EXPECT_EQ(exit_code(cli + " cluster -c " + conf.string() + " --set cluster.k=zero"), 1);
  EXPECT_EQ(exit_code(cli + " rules -c " + conf.string()), 2);
  EXPECT_EQ(exit_code(cli + " cluster -c " + conf.string()), 0);
  EXPECT_EQ(exit_code(cli + " nosuchcommand"), 1);
  EXPECT_EQ(exit_code(cli + " synth -o " + (dir.path() / "s").string() + " --formats auditd"), 1);
}

// The built-in detector run through the plugin contract scores like the in-process one.
TEST(Cli, PluginDetectorMatchesBuiltIn) {
  TempDir dir;
  auto conf = make_corpus(dir.path());
  std::string builtin;
  {
    pipeline::Pipeline p(pipeline::load_config(conf));
    p.run_all();
    builtin = slurp(p.out_dir() / "scores.csv");
  }
  pipeline::Pipeline p(pipeline::load_config(conf, {std::string("detect.plugin=") + AUTOPROV_CLI + " rarity-detector"}));
  auto outcomes = p.run_all();
  EXPECT_FALSE(outcomes[static_cast<int>(Stage::Detect)].skipped);
  EXPECT_EQ(slurp(p.out_dir() / "scores.csv"), builtin);
  auto metrics = nlohmann::json::parse(slurp(p.out_dir() / "metrics.json"));
  EXPECT_DOUBLE_EQ(metrics.at("adp").get<double>(), 1.0);
}
#endif
