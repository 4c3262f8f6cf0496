#include "autoprov/detect/detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "autoprov/core/jsonl.hpp"
#include "autoprov/core/text.hpp"
#include "autoprov/enrich/enrich.hpp"

namespace autoprov::detect {

void rank(std::vector<NodeScore>& scores) {
  std::sort(scores.begin(), scores.end(), [](const NodeScore& a, const NodeScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.node_key < b.node_key;
  });
}

void to_json(nlohmann::json& j, const RarityModel& m) {
  j = {{"signature_counts", m.signature_counts}, {"label_counts", m.label_counts}, {"total_nodes", m.total_nodes}};
}

void from_json(const nlohmann::json& j, RarityModel& m) {
  m.signature_counts = j.at("signature_counts").get<std::map<std::string, std::int64_t>>();
  m.label_counts = j.at("label_counts").get<std::map<std::string, std::int64_t>>();
  m.total_nodes = j.at("total_nodes").get<std::int64_t>();
}

RarityModel fit_reference_detector(const graph::ProvenanceGraph& benign) {
  if (benign.nodes().empty()) throw Error("cannot fit the reference detector on an empty graph");
  RarityModel m;
  for (const auto& [key, n] : benign.nodes()) {
    ++m.total_nodes;
    if (n.functional_label) ++m.label_counts[*n.functional_label];
    for (const auto& s : enrich::behavioral_profile(benign, key)) ++m.signature_counts[enrich::to_string(s)];
  }
  return m;
}

std::vector<NodeScore> score_nodes(const RarityModel& model, const graph::ProvenanceGraph& g) {
  enrich::LabelMap labels;
  for (const auto& [k, n] : g.nodes())
    if (n.functional_label) labels[k] = *n.functional_label;
  std::vector<NodeScore> out;
  for (const auto& [key, n] : g.nodes()) {
    auto profile = enrich::behavioral_profile(g, key, labels);
    if (profile.empty()) {
      out.push_back({key, 0.0, true});
      continue;
    }
    std::size_t unseen = 0;
    for (const auto& s : profile) unseen += !model.signature_counts.count(enrich::to_string(s));
    double label_term = n.functional_label && !model.label_counts.count(*n.functional_label) ? 1.0 : 0.0;
    out.push_back({key, 0.5 * static_cast<double>(unseen) / static_cast<double>(profile.size()) + 0.5 * label_term,
                   false});
  }
  rank(out);
  return out;
}

AttackGraph build_attack_graph(const graph::ProvenanceGraph& g, std::vector<NodeScore> scores,
                               std::size_t n_seed) {
  if (scores.empty()) throw Error("no node scores to seed an attack graph");
  if (n_seed == 0) throw Error("n_seed must be at least 1");
  rank(scores);
  AttackGraph a;
  for (const auto& s : scores) a.scores[s.node_key] = s.score;
  std::set<std::string> keep;
  const auto& edges = g.edges();
  for (std::size_t i = 0; i < scores.size() && i < n_seed; ++i) {
    const auto& key = scores[i].node_key;
    if (!g.node(key)) throw Error("scored node absent from graph: " + key);
    a.seed_keys.push_back(key);
    keep.insert(key);
    for (auto e : g.in_edges(key)) keep.insert(edges[e].src);
    for (auto e : g.out_edges(key)) keep.insert(edges[e].dst);
  }
  for (const auto& k : keep) a.nodes.emplace(k, *g.node(k));
  for (auto i : g.time_order())
    if (keep.count(edges[i].src) && keep.count(edges[i].dst)) a.edges.push_back(edges[i]);
  for (auto it = a.scores.begin(); it != a.scores.end();)
    it = keep.count(it->first) ? std::next(it) : a.scores.erase(it);
  return a;
}

void save_attack_graph(const std::filesystem::path& path, const AttackGraph& a) {
  std::vector<nlohmann::json> rows;
  rows.push_back({{"type", "seeds"}, {"seed_keys", a.seed_keys}});
  for (const auto& [k, n] : a.nodes) {
    auto it = a.scores.find(k);
    rows.push_back({{"type", "node"},
                    {"node", n},
                    {"score", it == a.scores.end() ? nlohmann::json() : nlohmann::json(it->second)}});
  }
  for (const auto& e : a.edges) rows.push_back({{"type", "edge"}, {"edge", e}});
  write_jsonl(path, rows);
}

AttackGraph load_attack_graph(const std::filesystem::path& path) {
  AttackGraph a;
  std::size_t line = 0;
  for (const auto& j : read_jsonl_values(path)) {
    ++line;
    try {
      auto type = j.at("type").get<std::string>();
      if (type == "seeds") {
        a.seed_keys = j.at("seed_keys").get<std::vector<std::string>>();
      } else if (type == "node") {
        auto n = j.at("node").get<graph::EntityNode>();
        if (!j.at("score").is_null()) a.scores[n.key] = j.at("score").get<double>();
        a.nodes.emplace(n.key, std::move(n));
      } else if (type == "edge") {
        a.edges.push_back(j.at("edge").get<graph::ProvEdge>());
      } else {
        throw ParseError("unknown row type " + type);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line);
    }
  }
  for (const auto& s : a.seed_keys)
    if (!a.nodes.count(s)) throw ParseError(path.string() + ": seed missing from nodes: " + s);
  for (const auto& e : a.edges)
    if (!a.nodes.count(e.src) || !a.nodes.count(e.dst))
      throw ParseError(path.string() + ": edge endpoint missing from nodes");
  return a;
}

std::string node_csv(const graph::ProvenanceGraph& g) {
  std::string out = "node_key,label\n";
  for (const auto& [k, n] : g.nodes())
    out += graph::csv_field(k) + "," + graph::csv_field(n.functional_label.value_or("")) + "\n";
  return out;
}

graph::ProvenanceGraph graph_from_csv(const std::string& edges_csv, const std::string& nodes_csv) {
  graph::ProvenanceGraph g;
  auto lines = text::split_lines(edges_csv);
  std::int64_t seq = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    auto c = graph::parse_csv_line(lines[i]);
    if (c.size() != 5) throw ParseError("edge csv: expected 5 columns", i + 1);
    graph::ProvEdge e{c[0], c[1], c[2], std::nullopt, 1, {}, seq++};
    if (!c[3].empty()) e.time = parse_timestamp(c[3]);
    try {
      e.count = std::stoll(c[4]);
    } catch (const std::exception&) {
      throw ParseError("edge csv: bad count", i + 1);
    }
    g.add_edge(std::move(e));
  }
  auto nl = text::split_lines(nodes_csv);
  for (std::size_t i = 1; i < nl.size(); ++i) {
    if (text::trim(nl[i]).empty()) continue;
    auto c = graph::parse_csv_line(nl[i]);
    if (c.size() != 2) throw ParseError("node csv: expected 2 columns", i + 1);
    auto& n = g.upsert_node(c[0], seq);
    if (!c[1].empty()) n.functional_label = c[1];
  }
  return g;
}

std::string scores_csv(const std::vector<NodeScore>& scores) {
  std::string out = "node_key,score\n";
  char buf[64];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, "%.17g", s.score);
    out += graph::csv_field(s.node_key) + "," + buf + "\n";
  }
  return out;
}

std::vector<NodeScore> read_scores_csv(const std::string& csv, const graph::ProvenanceGraph& g,
                                       std::vector<std::string>* warnings) {
  auto lines = text::split_lines(csv);
  if (lines.empty() || text::trim(lines[0]) != "node_key,score") throw ParseError("score csv: bad header", 1);
  std::map<std::string, double> got;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    auto c = graph::parse_csv_line(lines[i]);
    if (c.size() != 2) throw ParseError("score csv: expected 2 columns", i + 1);
    const auto& v = c[1];
    char* end = nullptr;
    double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d))
      throw ParseError("score csv: non-numeric score '" + v + "'", i + 1);
    if (!g.node(c[0])) {
      if (warnings) warnings->push_back("score for unknown node ignored: " + c[0]);
      continue;
    }
    got[c[0]] = d;
  }
  std::vector<NodeScore> out;
  for (const auto& [k, _] : g.nodes()) {
    auto it = got.find(k);
    if (it == got.end()) {
      if (warnings) warnings->push_back("no score for " + k + "; using 0");
      out.push_back({k, 0.0, false});
    } else {
      out.push_back({k, it->second, false});
    }
  }
  rank(out);
  return out;
}

namespace {

std::string shell_quote(const std::string& s) { return "'" + text::replace_all(s, "'", "'\\''") + "'"; }

}  // namespace

std::vector<NodeScore> run_detector_plugin(const std::string& command, const graph::ProvenanceGraph& train,
                                           const graph::ProvenanceGraph& test,
                                           const std::filesystem::path& workdir,
                                           std::vector<std::string>* warnings) {
  std::filesystem::create_directories(workdir);
  const auto te = workdir / "train_edges.csv", tn = workdir / "train_nodes.csv";
  const auto se = workdir / "test_edges.csv", sn = workdir / "test_nodes.csv";
  const auto out = workdir / "scores.csv";
  write_text_atomic(te, train.edge_csv());
  write_text_atomic(tn, node_csv(train));
  write_text_atomic(se, test.edge_csv());
  write_text_atomic(sn, node_csv(test));
  std::filesystem::remove(out);
  std::string cmd = command;
  for (const auto& p : {te, tn, se, sn, out}) cmd += " " + shell_quote(p.string());
  int rc = std::system(cmd.c_str());
  if (rc != 0) throw Error("detector plugin exited with status " + std::to_string(rc) + ": " + command);
  return read_scores_csv(read_text(out), test, warnings);
}

void rarity_detector_main(const std::filesystem::path& train_edges, const std::filesystem::path& train_nodes,
                          const std::filesystem::path& test_edges, const std::filesystem::path& test_nodes,
                          const std::filesystem::path& out_scores) {
  auto train = graph_from_csv(read_text(train_edges), read_text(train_nodes));
  auto test = graph_from_csv(read_text(test_edges), read_text(test_nodes));
  write_text_atomic(out_scores, scores_csv(score_nodes(fit_reference_detector(train), test)));
}

}  // namespace autoprov::detect
