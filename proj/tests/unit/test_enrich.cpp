#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "autoprov/enrich/enrich.hpp"
#include "autoprov/enrich/normalize.hpp"
#include "autoprov/llm/scripted.hpp"
#include "test_util.hpp"

using namespace autoprov;
using namespace autoprov::enrich;

namespace {

std::string fuzz_path(std::mt19937& gen) {
  static const std::string alphabet = "ab1.9/\\_-x0.Z";
  std::string s;
  std::size_t n = 1 + gen() % 24;
  for (std::size_t i = 0; i < n; ++i) s += alphabet[gen() % alphabet.size()];
  return s;
}

graph::ProvEdge edge(std::string s, std::string d, std::string itype) {
  return {std::move(s), std::move(d), std::move(itype), std::nullopt, 1, {"L"}, 0};
}

}  // namespace

TEST(Normalize, HandDerivedExamples) {
  EXPECT_EQ(normalize_entity_name("//usr//lib/app2.1/readme.txt"), "/usr/lib/app/readme.txt");
  EXPECT_EQ(normalize_entity_name("C:\\Tools\\run.exe"), "C:\\Tools\\run.exe");
  EXPECT_EQ(normalize_entity_name("/opt/svc3/agent7.log"), "/opt/svc/agent.log");
  EXPECT_EQ(normalize_entity_name("/var/log/"), "/var/log");
  EXPECT_EQ(normalize_entity_name("Firefox.EXE"), "Firefox.EXE");
}

TEST(Normalize, EmptyResultKeepsOriginal) {
  auto n = normalize_entity_name_ex("1234");
  EXPECT_EQ(n.name, "1234");
  EXPECT_TRUE(n.fallback);
}

TEST(Normalize, IdempotentOnFuzzedPaths) {
  std::mt19937 gen(11);
  for (int i = 0; i < 1000; ++i) {
    auto p = fuzz_path(gen);
    auto once = normalize_entity_name(p);
    EXPECT_EQ(normalize_entity_name(once), once) << p;
  }
}

TEST(FunctionalityDB, NeverSilentlyRelabels) {
  FunctionalityDB db;
  EXPECT_TRUE(db.put("/bin/a", "shell", LabelSource::LLM));
  EXPECT_FALSE(db.put("/bin/a", "editor", LabelSource::Behavioral));
  EXPECT_EQ(db.get("/bin/a")->label, "shell");
  EXPECT_TRUE(db.put("/bin/a", "editor", LabelSource::Manual));
  EXPECT_EQ(db.get("/bin/a")->source, LabelSource::Manual);
  EXPECT_FALSE(db.put("/bin/b", "  ", LabelSource::LLM));
}

TEST(FunctionalityDB, PersistRoundTripAndManualFile) {
  TempDir dir;
  FunctionalityDB db;
  db.put("/bin/a", "shell", LabelSource::LLM);
  db.put("x", "y", LabelSource::Behavioral);
  db.save(dir.path() / "f.jsonl");
  EXPECT_EQ(FunctionalityDB::load(dir.path() / "f.jsonl").snapshot(), db.snapshot());
  std::ofstream(dir.path() / "manual.tsv") << "# comment\n/opt/app2/run\trunner\n";
  db.load_manual(dir.path() / "manual.tsv");
  EXPECT_EQ(db.get("/opt/app/run")->label, "runner");
}

TEST(InferLabel, CachesAndHandlesNoLabel) {
  llm::ScriptedResponder s(nlohmann::json::parse(R"J({"rules":[
    {"template":"P6","equals":{"entity":"winword.exe"},"response":"winword.exe | Type: document editor"}],
    "default":"xq9r.bin | Type: <NO LABEL>"})J"));
  FunctionalityDB db;
  std::size_t calls = 0;
  EXPECT_EQ(infer_label_llm(s, "winword.exe", db, nullptr, &calls), "document editor");
  EXPECT_EQ(infer_label_llm(s, "xq9r.bin", db, nullptr, &calls), std::nullopt);
  EXPECT_EQ(calls, 2u);
  EXPECT_EQ(infer_label_llm(s, "winword.exe", db, nullptr, &calls), "document editor");
  EXPECT_EQ(calls, 2u);
  EXPECT_EQ(db.size(), 1u);
}

TEST(InferLabel, ProviderErrorIsNoLabel) {
  llm::ScriptedResponder s(nlohmann::json::parse(R"J({"rules":[{"response":{"error":"transport"}}]})J"));
  FunctionalityDB db;
  std::vector<std::string> warnings;
  EXPECT_EQ(infer_label_llm(s, "a", db, &warnings), std::nullopt);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Profile, SignaturesFromLabeledNeighbors) {
  graph::ProvenanceGraph g;
  g.add_edge(edge("/browser", "/f", "read"));
  g.add_edge(edge("/f", "/driver", "write"));
  g.add_edge(edge("/f", "/unlabeled", "write"));
  g.add_edge(edge("/browser", "/f", "read"));
  g.upsert_node("/iso", 9);
  LabelMap labels{{"/browser", "web browser"}, {"/driver", "Microsoft driver"}};
  auto p = behavioral_profile(g, "/f", labels);
  std::set<BehavioralSignature> want{{Direction::In, "read", "web browser"},
                                     {Direction::Out, "write", "Microsoft driver"}};
  EXPECT_EQ(p, want);
  EXPECT_TRUE(behavioral_profile(g, "/iso", labels).empty());
}

TEST(Profile, VectorGrowAndQuery) {
  SignatureIndex idx;
  BehavioralSignature a{Direction::In, "read", "x"}, b{Direction::Out, "write", "y"};
  EXPECT_EQ(profile_vector({}, idx, true), MultiHot{});
  auto v = profile_vector({a, b}, idx, true);
  EXPECT_EQ(std::count(v.begin(), v.end(), 1), 2);
  BehavioralSignature c{Direction::In, "exec", "z"};
  auto q = profile_vector({a, c}, idx, false);
  EXPECT_EQ(q.size(), 2u);
  EXPECT_EQ(std::count(q.begin(), q.end(), 1), 1);
  EXPECT_EQ(idx.dimension(), 2u);
  TempDir dir;
  idx.save(dir.path() / "sig.jsonl");
  EXPECT_EQ(SignatureIndex::load(dir.path() / "sig.jsonl").signatures(), idx.signatures());
}

TEST(Classify, ErrorsAndTies) {
  BehavioralDB db;
  EXPECT_THROW(classify_unknown({1}, db), NoReferenceError);
  db.put("b", {1, 0}, "B");
  db.put("a", {1, 0}, "A");
  EXPECT_THROW(classify_unknown({0, 0}, db), NoEvidenceError);
  EXPECT_EQ(classify_unknown({1, 0}, db).label, "A");
  db.put("c", {0, 1}, "C");
  EXPECT_EQ(classify_unknown({0, 1}, db).label, "C");
}

TEST(Classify, ShorterReferencesAreZeroExtended) {
  BehavioralDB db;
  db.put("old", {1}, "old");
  db.put("new", {0, 0, 1}, "new");
  EXPECT_EQ(classify_unknown({0, 0, 1}, db).label, "new");
  TempDir dir;
  db.save(dir.path() / "b.jsonl");
  auto back = BehavioralDB::load(dir.path() / "b.jsonl");
  EXPECT_EQ(back.entries().at("new").vector, (MultiHot{0, 0, 1}));
}

TEST(Classify, MatchesBruteForceArgmax) {
  std::mt19937 gen(5);
  for (std::size_t n = 1; n <= 200; n += 7) {
    BehavioralDB db;
    std::vector<std::pair<std::string, MultiHot>> refs;
    for (std::size_t i = 0; i < n; ++i) {
      MultiHot v(12);
      for (auto& b : v) b = gen() % 3 == 0;
      auto key = "k" + std::to_string(gen() % 1000);
      db.put(key, v, "L" + key);
      refs.emplace_back(key, v);
    }
    std::map<std::string, MultiHot> final_refs(refs.begin(), refs.end());
    for (auto& [k, v] : refs) final_refs[k] = v;  // later puts overwrite
    MultiHot q(12);
    q[gen() % 12] = 1;
    for (auto& b : q) b = b || gen() % 4 == 0;
    // Oracle: cosine from set sizes, strict max over keys in ascending order.
    std::string best;
    double best_s = -1;
    for (const auto& [k, v] : final_refs) {
      double inter = 0, a = 0, b = 0;
      for (int i = 0; i < 12; ++i) {
        inter += q[i] && v[i];
        a += q[i];
        b += v[i];
      }
      double s = (a && b) ? inter / std::sqrt(a * b) : 0.0;
      if (s > best_s + 1e-15) {
        best_s = s;
        best = k;
      }
    }
    EXPECT_EQ(classify_unknown(q, db).reference_key, best);
  }
}

TEST(EnrichGraph, FullCoverageNeedsNoBehavioralStep) {
  graph::ProvenanceGraph g;
  g.add_edge(edge("/bin/a", "/etc/b", "read"));
  g.add_edge(edge("/etc/b", "/bin/c", "read"));
  llm::ScriptedResponder s(nlohmann::json::parse(
      R"J({"rules":[{"template":"P6","binding_regex":{"entity":"^(?<n>.*)$"},"response":"@{n} | Type: label of @{n}"}]})J"));
  embed::HashingEmbedder emb;
  FunctionalityDB fdb;
  BehavioralDB bdb;
  SignatureIndex idx;
  auto r = enrich_graph(g, s, emb, fdb, bdb, idx);
  EXPECT_EQ(r.behavioral_classifications, 0u);
  EXPECT_TRUE(r.unlabeled.empty());
  EXPECT_EQ(r.labels.size(), 3u);
  EXPECT_EQ(r.label_features.size(), 3u);
  EXPECT_EQ(g.node("/bin/a")->functional_label, "label of /bin/a");
  // Second run hits the cache only.
  auto r2 = enrich_graph(g, s, emb, fdb, bdb, idx);
  EXPECT_EQ(r2.provider_calls, 0u);
}

TEST(EnrichGraph, UnknownNextToLabeledIsClassified) {
  graph::ProvenanceGraph g;
  // Two reference processes with the same behavior, one unknown that matches them.
  for (std::string p : {"/bin/ref1", "/bin/ref2", "/tmp/xq9r"}) {
    g.add_edge(edge("/usr/shell", p, "fork"));
    g.add_edge(edge(p, "/etc/passwd", "read"));
  }
  g.add_edge(edge("/tmp/lone1", "/tmp/lone2", "write"));
  llm::ScriptedResponder s(nlohmann::json::parse(R"J({"rules":[
    {"template":"P6","regex":"/bin/ref","response":"x | Type: credential reader"},
    {"template":"P6","equals":{"entity":"/usr/shell"},"response":"x | Type: shell"},
    {"template":"P6","equals":{"entity":"/etc/passwd"},"response":"x | Type: account file"}],
    "default":"x | Type: NO LABEL"})J"));
  embed::HashingEmbedder emb;
  FunctionalityDB fdb;
  BehavioralDB bdb;
  SignatureIndex idx;
  auto r = enrich_graph(g, s, emb, fdb, bdb, idx);
  EXPECT_EQ(r.labels.at("/tmp/xq9r"), "credential reader");
  EXPECT_EQ(fdb.get("/tmp/xq9r")->source, LabelSource::Behavioral);
  EXPECT_EQ(r.unlabeled, (std::vector<std::string>{"/tmp/lone1", "/tmp/lone2"}));
  EXPECT_EQ(r.behavioral_classifications, 1u);
}
