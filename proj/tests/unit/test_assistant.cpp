#include <gtest/gtest.h>

#include <random>
#include <regex>

#include "autoprov/assistant/assistant.hpp"
#include "autoprov/llm/scripted.hpp"

using namespace autoprov;
using namespace autoprov::assistant;

namespace {

detect::AttackGraph chain(const std::vector<std::tuple<std::string, std::string, std::string, int>>& es) {
  detect::AttackGraph a;
  std::int64_t t = 0;
  for (const auto& [s, d, i, n] : es) {
    for (const auto& k : {s, d}) a.nodes[k].key = k;
    a.edges.push_back({s, d, i, Timestamp{"", t}, n, {}, t});
    ++t;
  }
  return a;
}

llm::ScriptedResponder responder(const std::string& json) {
  return llm::ScriptedResponder(nlohmann::json::parse(json));
}

}  // namespace

TEST(Linearize, RepetitionSuffix) {
  auto l = linearize(chain({{"a", "b", "connect", 10}}));
  EXPECT_EQ(l.lines, (std::vector<std::string>{"a --connect--> b (x10)"}));
  EXPECT_EQ(linearize(chain({{"a", "b", "read", 1}})).lines, (std::vector<std::string>{"a --read--> b"}));
}

TEST(Linearize, CollapsesOnlyConsecutiveRuns) {
  auto l = linearize(chain({{"a", "b", "read", 1}, {"a", "b", "read", 1}, {"a", "b", "write", 1},
                            {"a", "b", "read", 1}}));
  EXPECT_EQ(l.lines, (std::vector<std::string>{"a --read--> b (x2)", "a --write--> b", "a --read--> b"}));
  EXPECT_EQ(l.entity_names, (std::vector<std::string>{"a", "b"}));
}

TEST(Linearize, UsesSmallestNameAsDisplay) {
  auto a = chain({{"/bin/app", "f", "exec", 1}});
  a.nodes["/bin/app"].names = {"/bin/app3", "/bin/app2"};
  EXPECT_EQ(linearize(a).lines[0], "/bin/app2 --exec--> f");
}

TEST(Linearize, CountConservationOnRandomGraphs) {
  std::mt19937 gen(17);
  std::regex suffix(R"( \(x(\d+)\)$)");
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::tuple<std::string, std::string, std::string, int>> es;
    std::int64_t total = 0;
    int n = 1 + gen() % 30;
    for (int i = 0; i < n; ++i) {
      int c = 1 + gen() % 4;
      total += c;
      es.emplace_back("n" + std::to_string(gen() % 3), "n" + std::to_string(gen() % 3), gen() % 2 ? "read" : "write", c);
    }
    auto l = linearize(chain(es));
    std::int64_t sum = 0;
    for (const auto& line : l.lines) {
      std::smatch m;
      sum += std::regex_search(line, m, suffix) ? std::stoll(m[1]) : 1;
    }
    EXPECT_EQ(sum, total);
    EXPECT_EQ(l.total_count, total);
  }
}

TEST(Catalog, BundledHasFourteenTactics) {
  auto c = TacticCatalog::bundled();
  EXPECT_EQ(c.tactics().size(), 14u);
  EXPECT_NE(c.find("reconnaissance"), nullptr);
  EXPECT_EQ(c.find("Teleportation"), nullptr);
  EXPECT_THROW(TacticCatalog::parse("A\tx\na\ty\n"), ParseError);
}

TEST(FlagUnknown, YesNoAndMalformed) {
  auto s = responder(R"J({"rules":[
    {"template":"P7","equals":{"entity":"firefox"},"response":"YES"},
    {"template":"P7","equals":{"entity":"xq9r.bin"},"response":"NO"},
    {"template":"P7","equals":{"entity":"odd"},"response":"maybe"},
    {"template":"P7","equals":{"entity":"down"},"response":{"error":"transport"}}]})J");
  std::vector<std::string> warnings;
  auto u = flag_unknown_entities(s, {"firefox", "xq9r.bin", "odd", "down"}, &warnings);
  EXPECT_EQ(u, (std::set<std::string>{"down", "odd", "xq9r.bin"}));
  EXPECT_EQ(warnings.size(), 2u);
}

TEST(InjectContext, LabelsAndFallback) {
  auto a = chain({{"/tmp/x", "/bin/y", "exec", 1}});
  enrich::FunctionalityDB fdb;
  fdb.put("/tmp/x", "downloader", enrich::LabelSource::Behavioral);
  auto c = inject_context({"/tmp/x", "/bin/y"}, a, fdb);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], (ContextEntry{"/bin/y", "unknown functionality", true}));
  EXPECT_EQ(c[1], (ContextEntry{"/tmp/x", "downloader", false}));
  EXPECT_TRUE(inject_context({}, a, fdb).empty());
}

TEST(Summarize, ParsesSummaryAndFiltersTactics) {
  auto s = responder(R"J({"rules":[{"template":"P8","response":
    "Summary: The host resolved many domains\nin quick succession.\n\nStage: Reconnaissance\nReasoning: repeated DNS queries.\n\nStage: Teleportation\nReasoning: none"}]})J");
  LinearizedGraph l{{"a --query--> dns (x40)"}, {"a", "dns"}, 40};
  auto r = summarize_attack(s, l, {}, {"a"}, TacticCatalog::bundled());
  EXPECT_EQ(r.summary_text, "The host resolved many domains in quick succession.");
  ASSERT_EQ(r.tactics.size(), 1u);
  EXPECT_EQ(r.tactics[0].tactic, "Reconnaissance");
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Summarize, NoStagesAndMissingSummary) {
  LinearizedGraph l{{"a --read--> b"}, {"a", "b"}, 1};
  auto ok = responder(R"J({"rules":[{"response":"Summary: a read b."}]})J");
  EXPECT_TRUE(summarize_attack(ok, l, {}, {"a"}, TacticCatalog::bundled()).tactics.empty());
  auto bad = responder(R"J({"rules":[{"response":"Stage: Impact"}]})J");
  try {
    summarize_attack(bad, l, {}, {"a"}, TacticCatalog::bundled());
    FAIL();
  } catch (const AssistantError& e) {
    EXPECT_EQ(e.raw_response(), "Stage: Impact");
  }
}

TEST(Judge, MajorityOfThree) {
  auto yes = responder(R"J({"rules":[{"response":"YES"}]})J");
  auto no = responder(R"J({"rules":[{"response":"NO"}]})J");
  auto err = responder(R"J({"rules":[{"response":{"error":"protocol"}}]})J");
  auto cat = TacticCatalog::bundled();
  EXPECT_TRUE(judge_tactic({&yes, &yes, &no}, "Impact", "r", cat));
  EXPECT_FALSE(judge_tactic({&yes, &no, &no}, "Impact", "r", cat));
  std::vector<std::string> warnings;
  EXPECT_TRUE(judge_tactic({&err, &yes, &yes}, "Impact", "r", cat, &warnings));
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Judge, TacticCorrectnessArithmetic) {
  // Judges accept only the tactics named in their script.
  auto j = responder(R"J({"rules":[{"template":"P9","regex":"APT tactic: (Impact|Discovery|Execution)\\b","response":"YES"}],"default":"NO"})J");
  auto cat = TacticCatalog::bundled();
  AttackSummary s;
  EXPECT_EQ(tactic_correctness(s, {&j, &j, &j}, cat), std::nullopt);
  std::vector<std::string> names = {"Impact", "Discovery", "Execution", "Collection", "Persistence"};
  for (std::size_t m = 1; m <= 5; ++m) {
    s.tactics.clear();
    for (std::size_t i = 0; i < m; ++i) s.tactics.push_back({names[i], "why"});
    double expected = static_cast<double>(std::min<std::size_t>(m, 3)) / static_cast<double>(m);
    EXPECT_DOUBLE_EQ(*tactic_correctness(s, {&j, &j, &j}, cat), expected) << m;
  }
}
