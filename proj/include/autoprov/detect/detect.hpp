#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "autoprov/graph/graph.hpp"

namespace autoprov::detect {

struct NodeScore {
  std::string node_key;
  double score = 0;
  bool empty_profile = false;
  bool operator==(const NodeScore&) const = default;
};

// Sorts by score descending, then key ascending.
void rank(std::vector<NodeScore>& scores);

// Novelty counts over a benign graph. Signatures use the labels stored on nodes.
struct RarityModel {
  std::map<std::string, std::int64_t> signature_counts;
  std::map<std::string, std::int64_t> label_counts;
  std::int64_t total_nodes = 0;
  bool operator==(const RarityModel&) const = default;
};

void to_json(nlohmann::json& j, const RarityModel& m);
void from_json(const nlohmann::json& j, RarityModel& m);

RarityModel fit_reference_detector(const graph::ProvenanceGraph& benign);

// 0.5 * (share of the node's signatures never seen in benign) +
// 0.5 * (node has a label never seen in benign). Empty profiles score 0 and
// are flagged. Returned ranked.
std::vector<NodeScore> score_nodes(const RarityModel& model, const graph::ProvenanceGraph& g);

struct AttackGraph {
  std::vector<std::string> seed_keys;
  std::map<std::string, graph::EntityNode> nodes;
  std::vector<graph::ProvEdge> edges;  // time order, arrival tie-break
  std::map<std::string, double> scores;

  bool empty() const { return nodes.empty(); }
  bool operator==(const AttackGraph&) const = default;
};

// Top n_seed nodes, their one-hop neighbors, and every edge between included nodes.
AttackGraph build_attack_graph(const graph::ProvenanceGraph& g, std::vector<NodeScore> scores,
                               std::size_t n_seed);

void save_attack_graph(const std::filesystem::path& path, const AttackGraph& a);
AttackGraph load_attack_graph(const std::filesystem::path& path);

// Plugin contract. A detector is any program invoked as
//   <cmd> train_edges.csv train_nodes.csv test_edges.csv test_nodes.csv out_scores.csv
// that writes a "node_key,score" CSV for the test graph.
std::string node_csv(const graph::ProvenanceGraph& g);  // node_key,label
graph::ProvenanceGraph graph_from_csv(const std::string& edges_csv, const std::string& nodes_csv);
std::string scores_csv(const std::vector<NodeScore>& scores);
// Nodes of `g` missing from the file score 0 with a warning; bad rows throw
// ParseError carrying the 1-based line number.
std::vector<NodeScore> read_scores_csv(const std::string& csv, const graph::ProvenanceGraph& g,
                                       std::vector<std::string>* warnings = nullptr);

// Writes the four input files into `workdir`, runs `command`, reads the scores.
std::vector<NodeScore> run_detector_plugin(const std::string& command, const graph::ProvenanceGraph& train,
                                           const graph::ProvenanceGraph& test,
                                           const std::filesystem::path& workdir,
                                           std::vector<std::string>* warnings = nullptr);

// The built-in detector behind the plugin contract.
void rarity_detector_main(const std::filesystem::path& train_edges, const std::filesystem::path& train_nodes,
                          const std::filesystem::path& test_edges, const std::filesystem::path& test_nodes,
                          const std::filesystem::path& out_scores);

}  // namespace autoprov::detect
