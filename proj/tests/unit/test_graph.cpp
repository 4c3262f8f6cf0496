#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "autoprov/core/text.hpp"
#include "autoprov/graph/graph.hpp"
#include "test_util.hpp"

using namespace autoprov;
using namespace autoprov::graph;

namespace {

ProvenanceRecord rec(std::string sid, std::optional<std::string> sname, std::string did,
                     std::optional<std::string> dname, std::string itype, std::string time = "",
                     std::string log = "L1") {
  ProvenanceRecord r;
  r.sid = std::move(sid);
  r.sname = std::move(sname);
  r.did = std::move(did);
  r.dname = std::move(dname);
  r.itype = std::move(itype);
  if (!time.empty()) r.time = parse_timestamp(time);
  r.source_log_id = std::move(log);
  return r;
}

}  // namespace

TEST(Graph, ResolveNamedEntityUsesNormalizedName) {
  auto r = rec("p1", "/usr//lib/app2/x.exe", "f1", std::nullopt, "read");
  EXPECT_EQ(resolve_entity(r, Side::Src), "/usr/lib/app/x.exe");
}

TEST(Graph, ResolveAnonymousIsLogScoped) {
  auto r = rec("p1", "/bin/sh", "id-1", std::nullopt, "read", "", "L7");
  EXPECT_EQ(resolve_entity(r, Side::Dst), "anon:L7:id-1");
}

TEST(Graph, ResolveEndpointVerbatim) {
  auto r = rec("10.0.0.1:443", std::nullopt, "f", "x", "connect");
  r.stype = "source address";
  EXPECT_EQ(resolve_entity(r, Side::Src), "10.0.0.1:443");
  auto named = rec("10.0.0.1:443", "10.0.0.1:443", "f", "x", "connect");
  EXPECT_EQ(resolve_entity(named, Side::Src), "10.0.0.1:443");
}

TEST(Graph, IdenticalRecordsInOneBucketAggregate) {
  auto a = rec("p", "/bin/a", "f", "/tmp/b", "read", "2024-01-01T00:00:00.100Z");
  auto b = rec("p", "/bin/a", "f", "/tmp/b", "read", "2024-01-01T00:00:00.900Z", "L2");
  auto g = build_graph({a, b});
  ASSERT_EQ(g.edges().size(), 1u);
  EXPECT_EQ(g.edges()[0].count, 2);
  EXPECT_EQ(g.edges()[0].time->raw, "2024-01-01T00:00:00.100Z");
  EXPECT_EQ(g.edges()[0].source_log_ids, (std::vector<std::string>{"L1", "L2"}));
}

TEST(Graph, DifferentBucketOrItypeSplits) {
  auto a = rec("p", "/bin/a", "f", "/tmp/b", "read", "2024-01-01T00:00:00Z");
  auto b = rec("p", "/bin/a", "f", "/tmp/b", "read", "2024-01-01T00:00:01Z");
  auto c = rec("p", "/bin/a", "f", "/tmp/b", "write", "2024-01-01T00:00:00Z");
  EXPECT_EQ(build_graph({a, b}).edges().size(), 2u);
  EXPECT_EQ(build_graph({a, c}).edges().size(), 2u);
}

TEST(Graph, AliasGrowsNamesNotNodes) {
  auto a = rec("p", "/bin/app2", "f", "/tmp/b", "read");
  auto b = rec("p", "/bin/app3", "f", "/tmp/b", "read");
  auto g = build_graph({a, b});
  EXPECT_EQ(g.nodes().size(), 2u);
  EXPECT_EQ(g.node("/bin/app")->names, (std::set<std::string>{"/bin/app2", "/bin/app3"}));
  EXPECT_EQ(g.node("/bin/app")->display_name(), "/bin/app2");
}

TEST(Graph, EmptyAndHandCount) {
  EXPECT_TRUE(build_graph({}).nodes().empty());
  // 4 records over 3 named entities.
  std::vector<ProvenanceRecord> rs = {
      rec("1", "/bin/a", "2", "/etc/b", "read"), rec("1", "/bin/a", "3", "/etc/c", "write"),
      rec("2", "/etc/b", "3", "/etc/c", "read"), rec("3", "/etc/c", "1", "/bin/a", "exec")};
  auto g = build_graph(rs);
  EXPECT_EQ(g.nodes().size(), 3u);
  EXPECT_EQ(g.edges().size(), 4u);
  for (const auto& e : g.edges()) {
    EXPECT_TRUE(g.node(e.src));
    EXPECT_TRUE(g.node(e.dst));
  }
}

TEST(Graph, PermutationInvariantUpToEdgeOrder) {
  std::vector<ProvenanceRecord> rs;
  std::mt19937 gen(3);
  const char* names[] = {"/bin/a", "/bin/b", "/tmp/c", "/tmp/d"};
  for (int i = 0; i < 60; ++i) {
    int s = gen() % 4, d = gen() % 4;
    rs.push_back(rec("x", names[s], "y", names[d], gen() % 2 ? "read" : "write",
                     "2024-01-01T00:00:0" + std::to_string(gen() % 5) + "Z", "L" + std::to_string(i)));
  }
  auto g1 = build_graph(rs);
  std::shuffle(rs.begin(), rs.end(), gen);
  auto g2 = build_graph(rs);
  auto strip = [](const ProvenanceGraph& g) {
    std::vector<ProvEdge> es = g.edges();
    for (auto& e : es) e.first_seq = 0;
    std::sort(es.begin(), es.end(), [](const auto& a, const auto& b) {
      return std::tie(a.src, a.dst, a.itype, a.time->raw) < std::tie(b.src, b.dst, b.itype, b.time->raw);
    });
    return es;
  };
  EXPECT_EQ(strip(g1), strip(g2));
  ASSERT_EQ(g1.nodes().size(), g2.nodes().size());
  for (const auto& [k, n] : g1.nodes()) EXPECT_EQ(n.names, g2.node(k)->names);
  std::int64_t total = 0;
  for (const auto& e : g1.edges()) total += e.count;
  EXPECT_EQ(total, 60);
}

TEST(Graph, SaveLoadRoundTripAndCsv) {
  TempDir dir;
  auto g = build_graph({rec("1", "/bin/a,b", "2", "/etc/\"q\"", "read", "2024-01-01T00:00:00Z")});
  g.save(dir.path() / "nodes.jsonl", dir.path() / "edges.jsonl");
  auto h = ProvenanceGraph::load(dir.path() / "nodes.jsonl", dir.path() / "edges.jsonl");
  EXPECT_EQ(g.nodes(), h.nodes());
  EXPECT_EQ(g.edges(), h.edges());
  auto lines = text::split_lines(g.edge_csv());
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "src,dst,itype,time,count");
  auto cols = parse_csv_line(lines[1]);
  ASSERT_EQ(cols.size(), 5u);
  EXPECT_EQ(cols[0], "/bin/a,b");
  EXPECT_EQ(cols[1], "/etc/\"q\"");
  EXPECT_EQ(cols[4], "1");
}
