#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "autoprov/core/records.hpp"
#include "json.hpp"

namespace autoprov::graph {

enum class Side { Src, Dst };

// Endpoint ids (IPv4[:port]) are kept verbatim; otherwise a present name is
// normalized; otherwise the id is scoped to its source log.
std::string resolve_entity(const ProvenanceRecord& record, Side side);

struct EntityNode {
  std::string key;
  std::set<std::string> names;
  std::set<std::string> coarse_types;
  std::optional<std::string> functional_label;
  std::int64_t first_seen_seq = 0;

  // Lexicographically smallest name, else the key.
  std::string display_name() const { return names.empty() ? key : *names.begin(); }
  bool operator==(const EntityNode&) const = default;
};

struct ProvEdge {
  std::string src;
  std::string dst;
  std::string itype;
  std::optional<Timestamp> time;  // earliest time within the bucket
  std::int64_t count = 1;
  std::vector<std::string> source_log_ids;  // sorted, smallest few
  std::int64_t first_seq = 0;               // arrival order of the first record
  bool operator==(const ProvEdge&) const = default;
};

void to_json(nlohmann::json& j, const EntityNode& n);
void from_json(const nlohmann::json& j, EntityNode& n);
void to_json(nlohmann::json& j, const ProvEdge& e);
void from_json(const nlohmann::json& j, ProvEdge& e);

struct GraphOptions {
  std::int64_t bucket_micros = 1'000'000;
  std::size_t max_log_sample = 8;
};

class ProvenanceGraph {
 public:
  explicit ProvenanceGraph(GraphOptions options = {}) : options_(options) {}

  void add_record(const ProvenanceRecord& record, std::int64_t seq);
  // Inserts or replaces a node (used when loading and by tests).
  EntityNode& upsert_node(const std::string& key, std::int64_t seq);
  void add_edge(ProvEdge edge);

  const std::map<std::string, EntityNode>& nodes() const { return nodes_; }
  std::map<std::string, EntityNode>& mutable_nodes() { return nodes_; }
  const std::vector<ProvEdge>& edges() const { return edges_; }
  const EntityNode* node(const std::string& key) const;
  const std::vector<std::size_t>& in_edges(const std::string& key) const;
  const std::vector<std::size_t>& out_edges(const std::string& key) const;
  const GraphOptions& options() const { return options_; }

  // Edge indices ordered by (time, arrival).
  std::vector<std::size_t> time_order() const;

  void save(const std::filesystem::path& nodes_path, const std::filesystem::path& edges_path) const;
  static ProvenanceGraph load(const std::filesystem::path& nodes_path,
                              const std::filesystem::path& edges_path, GraphOptions options = {});
  // src,dst,itype,time,count with a header row.
  std::string edge_csv() const;

 private:
  std::string bucket_of(const std::optional<Timestamp>& t) const;

  GraphOptions options_;
  std::map<std::string, EntityNode> nodes_;
  std::vector<ProvEdge> edges_;
  std::map<std::tuple<std::string, std::string, std::string, std::string>, std::size_t> edge_index_;
  std::map<std::string, std::vector<std::size_t>> in_, out_;
};

ProvenanceGraph build_graph(const std::vector<ProvenanceRecord>& records, GraphOptions options = {});

// Quotes a CSV field when it holds a comma, quote or newline.
std::string csv_field(std::string_view s);
// Splits one CSV line honoring double quotes.
std::vector<std::string> parse_csv_line(std::string_view line);

}  // namespace autoprov::graph
