#include <gtest/gtest.h>

#include "autoprov/core/jsonl.hpp"
#include "autoprov/detect/detect.hpp"
#include "test_util.hpp"

using namespace autoprov;
using namespace autoprov::detect;

namespace {

void add(graph::ProvenanceGraph& g, const std::string& s, const std::string& d, const std::string& itype,
         std::int64_t t = 0) {
  Timestamp ts{"t" + std::to_string(t), t * 1'000'000};
  g.add_edge({s, d, itype, ts, 1, {"L"}, t});
}

void label(graph::ProvenanceGraph& g, const std::string& k, const std::string& l) {
  g.mutable_nodes().at(k).functional_label = l;
}

}  // namespace

TEST(Rarity, FitCountsSignatures) {
  graph::ProvenanceGraph g;
  add(g, "a", "b", "read");
  add(g, "b", "c", "write");
  label(g, "a", "A");
  label(g, "b", "B");
  label(g, "c", "C");
  auto m = fit_reference_detector(g);
  // a: OUT read B; b: IN read A, OUT write C; c: IN write B.
  EXPECT_EQ(m.signature_counts.size(), 4u);
  EXPECT_EQ(m.total_nodes, 3);
  EXPECT_EQ(m, fit_reference_detector(g));
  EXPECT_THROW(fit_reference_detector(graph::ProvenanceGraph{}), Error);
}

TEST(Rarity, ScoreFormula) {
  graph::ProvenanceGraph benign;
  add(benign, "p", "f", "read");
  label(benign, "p", "proc");
  label(benign, "f", "file");
  auto m = fit_reference_detector(benign);

  graph::ProvenanceGraph test;
  add(test, "p", "f", "read");
  add(test, "p", "g", "write");
  add(test, "x", "y", "exec");
  test.upsert_node("iso", 9);
  label(test, "p", "proc");
  label(test, "f", "file");
  label(test, "g", "file");
  label(test, "x", "novel");
  label(test, "y", "novel2");
  auto scores = score_nodes(m, test);
  std::map<std::string, NodeScore> by;
  for (auto& s : scores) by[s.node_key] = s;
  EXPECT_DOUBLE_EQ(by["f"].score, 0.0);
  EXPECT_DOUBLE_EQ(by["p"].score, 0.25);  // 1 of 2 signatures unseen, label seen
  EXPECT_DOUBLE_EQ(by["x"].score, 1.0);
  EXPECT_TRUE(by["iso"].empty_profile);
  EXPECT_EQ(by["iso"].score, 0.0);
  EXPECT_EQ(scores[0].node_key, "x");
  EXPECT_EQ(scores[1].node_key, "y");
}

TEST(AttackGraph, StarIsFullyIncluded) {
  graph::ProvenanceGraph g;
  for (int i = 0; i < 4; ++i) add(g, "hub", "leaf" + std::to_string(i), "write", 4 - i);
  add(g, "leaf0", "far", "read", 9);
  auto a = build_attack_graph(g, {{"hub", 1.0}, {"leaf0", 0.1}}, 1);
  EXPECT_EQ(a.seed_keys, (std::vector<std::string>{"hub"}));
  EXPECT_EQ(a.nodes.size(), 5u);
  EXPECT_EQ(a.edges.size(), 4u);
  for (std::size_t i = 1; i < a.edges.size(); ++i)
    EXPECT_LE(*a.edges[i - 1].time->epoch_micros, *a.edges[i].time->epoch_micros);
}

TEST(AttackGraph, SeedsShareBenignNeighbor) {
  graph::ProvenanceGraph g;
  add(g, "A", "b", "write");
  add(g, "b", "C", "read");
  add(g, "b", "z", "read");
  auto a = build_attack_graph(g, {{"A", 0.9}, {"C", 0.9}, {"b", 0}, {"z", 0}}, 2);
  EXPECT_EQ(a.seed_keys, (std::vector<std::string>{"A", "C"}));
  EXPECT_EQ(a.nodes.size(), 3u);
  EXPECT_EQ(a.edges.size(), 2u);
}

TEST(AttackGraph, SaturationAndErrors) {
  graph::ProvenanceGraph g;
  add(g, "a", "b", "read");
  auto a = build_attack_graph(g, {{"a", 0.5}, {"b", 0.5}}, 10);
  EXPECT_EQ(a.seed_keys, (std::vector<std::string>{"a", "b"}));
  EXPECT_THROW(build_attack_graph(g, {}, 1), Error);
  TempDir dir;
  save_attack_graph(dir.path() / "ag.jsonl", a);
  EXPECT_EQ(load_attack_graph(dir.path() / "ag.jsonl"), a);
}

TEST(Plugin, FileRoundTripMatchesInProcess) {
  TempDir dir;
  graph::ProvenanceGraph benign, test;
  add(benign, "p", "f", "read");
  label(benign, "p", "proc");
  label(benign, "f", "file");
  add(test, "p", "f", "read");
  add(test, "p", "x,y", "write");
  label(test, "p", "proc");
  label(test, "f", "file");
  label(test, "x,y", "odd");
  write_text_atomic(dir.path() / "a.csv", benign.edge_csv());
  write_text_atomic(dir.path() / "b.csv", node_csv(benign));
  write_text_atomic(dir.path() / "c.csv", test.edge_csv());
  write_text_atomic(dir.path() / "d.csv", node_csv(test));
  rarity_detector_main(dir.path() / "a.csv", dir.path() / "b.csv", dir.path() / "c.csv", dir.path() / "d.csv",
                       dir.path() / "out.csv");
  auto via_file = read_scores_csv(read_text(dir.path() / "out.csv"), test);
  auto direct = score_nodes(fit_reference_detector(benign), test);
  for (auto& s : direct) s.empty_profile = false;
  EXPECT_EQ(via_file, direct);
}

TEST(Plugin, MissingNodeDefaultsAndBadRowsFail) {
  graph::ProvenanceGraph g;
  add(g, "a", "b", "read");
  std::vector<std::string> warnings;
  auto s = read_scores_csv("node_key,score\na,0.5\n", g, &warnings);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1].node_key, "b");
  EXPECT_EQ(s[1].score, 0.0);
  EXPECT_EQ(warnings.size(), 1u);
  try {
    read_scores_csv("node_key,score\na,0.5\nb,high\n", g);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}
