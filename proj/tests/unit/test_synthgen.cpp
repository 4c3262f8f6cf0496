#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "autoprov/cluster/cluster.hpp"
#include "autoprov/cpe/cpe.hpp"
#include "autoprov/embed/embedding.hpp"
#include "autoprov/enrich/normalize.hpp"
#include "autoprov/eval/metrics.hpp"
#include "autoprov/graph/graph.hpp"
#include "autoprov/llm/scripted.hpp"
#include "autoprov/rules/rules.hpp"
#include "autoprov/synthgen/synthgen.hpp"
#include "test_util.hpp"

using namespace autoprov;

namespace {

synthgen::CorpusSpec small_spec() {
  synthgen::CorpusSpec s;
  s.formats = {"auditd", "win4663"};
  s.lines_per_format = 50;
  s.seed = 11;
  return s;
}

}  // namespace

TEST(Synthgen, SizesAndIds) {
  auto c = synthgen::generate(small_spec());
  ASSERT_EQ(c.test.size(), 100u);
  EXPECT_TRUE(c.train.empty());
  std::map<std::string, int> per;
  for (std::size_t i = 0; i < c.test.size(); ++i) {
    EXPECT_EQ(c.test[i].log.arrival_seq, static_cast<std::int64_t>(i));
    EXPECT_EQ(c.test[i].oracle.source_log_id, c.test[i].log.log_id);
    ++per[c.test[i].format];
  }
  EXPECT_EQ(per["auditd"], 50);
  EXPECT_EQ(per["win4663"], 50);
}

TEST(Synthgen, Deterministic) {
  auto a = synthgen::generate(small_spec());
  auto b = synthgen::generate(small_spec());
  ASSERT_EQ(a.test.size(), b.test.size());
  for (std::size_t i = 0; i < a.test.size(); ++i) EXPECT_EQ(a.test[i].log, b.test[i].log);
  EXPECT_EQ(a.stub_script, b.stub_script);
  auto s = small_spec();
  s.seed = 12;
  EXPECT_NE(synthgen::generate(s).test[0].log.raw_text, a.test[0].log.raw_text);
}

TEST(Synthgen, RejectsBadSpecs) {
  auto s = small_spec();
  s.formats = {"auditd"};
  EXPECT_THROW(synthgen::validate(s), Error);
  s.formats = {"auditd", "nope"};
  EXPECT_THROW(synthgen::validate(s), Error);
  s.formats = {"cdm", "clf"};
  s.attacks = {"dropper_chain"};
  EXPECT_THROW(synthgen::validate(s), Error);
}

TEST(Synthgen, AttacksInOracleGraph) {
  auto s = small_spec();
  s.attacks = {"dropper_chain", "stealth_miner"};
  auto c = synthgen::generate(s);
  EXPECT_EQ(c.test.size(), 100u + 13u + 2u);
  EXPECT_EQ(c.attack_nodes.size(), 6u);
  auto g = graph::build_graph(synthgen::oracle_records(c.test));
  for (const auto& [key, attack] : c.attack_nodes) {
    EXPECT_TRUE(g.node(key)) << key;
    EXPECT_TRUE(c.entity_labels.count(key));
  }
  // Attack lines keep their relative order.
  std::vector<std::size_t> at;
  for (std::size_t i = 0; i < c.test.size(); ++i)
    if (c.test[i].attack_id == "dropper_chain") at.push_back(i);
  ASSERT_EQ(at.size(), 13u);
  EXPECT_TRUE(c.test[at.front()].log.raw_text.find("/tmp/.x/dropper") != std::string::npos);
  EXPECT_TRUE(c.test[at.back()].log.raw_text.find("stolen.db") != std::string::npos);
}

TEST(Synthgen, OracleTimesIncrease) {
  auto c = synthgen::generate(small_spec());
  std::int64_t last = 0;
  for (const auto& l : c.test) {
    ASSERT_TRUE(l.oracle.time && l.oracle.time->epoch_micros) << l.log.raw_text;
    EXPECT_GT(*l.oracle.time->epoch_micros, last);
    last = *l.oracle.time->epoch_micros;
  }
}

TEST(Synthgen, EveryFormatParsesItsTimestamps) {
  synthgen::CorpusSpec s;
  s.formats = synthgen::format_names();
  s.lines_per_format = 20;
  auto c = synthgen::generate(s);
  for (const auto& l : c.test) {
    ASSERT_TRUE(l.oracle.time) << l.format;
    EXPECT_TRUE(l.oracle.time->epoch_micros) << l.format << " " << l.oracle.time->raw;
  }
}

TEST(Synthgen, WriteAndReadBack) {
  TempDir dir;
  auto c = synthgen::generate(small_spec());
  synthgen::write_corpus(dir.path(), c);
  auto logs = read_log_file(dir.path() / "test.log", "test");
  ASSERT_EQ(logs.size(), c.test.size());
  for (std::size_t i = 0; i < logs.size(); ++i) EXPECT_EQ(logs[i], c.test[i].log);
  for (auto f : {"truth_test.jsonl", "entities.jsonl", "attacks.jsonl", "stub_script.json"})
    EXPECT_TRUE(std::filesystem::exists(dir.path() / f)) << f;
}

// The stub script drives CPE and rule induction to the oracle records.
TEST(Synthgen, StubScriptRoundTripAllFormats) {
  synthgen::CorpusSpec s;
  s.formats = synthgen::format_names();
  s.lines_per_format = 40;
  s.attacks = {"dropper_chain", "stealth_miner"};
  auto c = synthgen::generate(s);
  llm::ScriptedResponder stub(c.stub_script);

  std::map<std::string, ProvenanceRecord> oracle;
  for (const auto& l : c.test) oracle[l.log.log_id] = l.oracle;

  // Every line through CPE directly.
  std::vector<cluster::CandidateEntry> all;
  for (const auto& l : c.test) all.push_back({l.log.log_id, l.log.raw_text, 0});
  cpe::InContextPool pool;
  cpe::CpeConfig cfg;
  auto res = cpe::run_cpe(stub, all, pool, cfg);
  EXPECT_TRUE(res.skips.empty()) << (res.skips.empty() ? "" : res.skips[0].log_id + " " + res.skips[0].cause);
  for (const auto& [id, recs] : res.db) {
    ASSERT_EQ(recs.size(), 1u) << id;
    EXPECT_TRUE(same_fields(recs[0], oracle[id])) << id << " " << nlohmann::json(recs[0]).dump() << " vs "
                                                  << nlohmann::json(oracle[id]).dump();
  }

  // Rules built from each record reproduce it and generalize.
  rules::RuleDB db;
  std::set<std::string> formats_with_rule;
  for (const auto& l : c.test) {
    auto it = res.db.find(l.log.log_id);
    if (it == res.db.end() || formats_with_rule.count(l.format)) continue;
    auto out = rules::build_ruleset(stub, l.log.raw_text, it->second[0], 0);
    ASSERT_TRUE(out.rule) << l.format << " " << nlohmann::json(out.report).dump();
    auto again = rules::apply_ruleset(*out.rule, l.log.raw_text, l.log.log_id);
    ASSERT_TRUE(again);
    EXPECT_TRUE(same_fields(*again, it->second[0])) << l.format;
    db.insert(*out.rule);
    formats_with_rule.insert(l.format);
  }
  EXPECT_EQ(formats_with_rule.size(), 6u);
  int matched = 0;
  for (const auto& l : c.test) {
    auto recs = db.apply(l.log.raw_text, l.log.log_id, 0);
    if (recs.size() == 1 && same_fields(recs[0], l.oracle)) ++matched;
    else ADD_FAILURE() << l.format << ": " << l.log.raw_text;
  }
  EXPECT_EQ(matched, static_cast<int>(c.test.size()));
}

TEST(Synthgen, StubLabelsEveryEntity) {
  synthgen::CorpusSpec s;
  s.formats = synthgen::format_names();
  s.lines_per_format = 60;
  s.attacks = {"dropper_chain", "stealth_miner"};
  auto c = synthgen::generate(s);
  llm::ScriptedResponder stub(c.stub_script);
  auto g = graph::build_graph(synthgen::oracle_records(c.test));
  for (const auto& [key, n] : g.nodes()) {
    auto text = stub.complete(llm::ChatRequest::make(llm::PromptId::P6, {{"entity", key}}));
    EXPECT_EQ(text.find("NO LABEL"), std::string::npos) << key;
  }
}
