#include "autoprov/graph/graph.hpp"

#include <algorithm>

#include "autoprov/core/jsonl.hpp"
#include "autoprov/core/text.hpp"
#include "autoprov/enrich/normalize.hpp"

namespace autoprov::graph {

std::string resolve_entity(const ProvenanceRecord& r, Side side) {
  const auto& id = side == Side::Src ? r.sid : r.did;
  const auto& name = side == Side::Src ? r.sname : r.dname;
  if (enrich::is_endpoint(id)) return id;
  if (name && !text::trim(*name).empty()) {
    if (enrich::is_endpoint(*name)) return *name;
    return enrich::normalize_entity_name(*name);
  }
  return "anon:" + r.source_log_id + ":" + id;
}

void to_json(nlohmann::json& j, const EntityNode& n) {
  j = {{"key", n.key},
       {"names", n.names},
       {"coarse_types", n.coarse_types},
       {"functional_label", n.functional_label ? nlohmann::json(*n.functional_label) : nlohmann::json()},
       {"first_seen_seq", n.first_seen_seq}};
}

void from_json(const nlohmann::json& j, EntityNode& n) {
  n.key = j.at("key").get<std::string>();
  n.names = j.at("names").get<std::set<std::string>>();
  n.coarse_types = j.at("coarse_types").get<std::set<std::string>>();
  const auto& l = j.at("functional_label");
  n.functional_label = l.is_null() ? std::nullopt : std::optional(l.get<std::string>());
  n.first_seen_seq = j.at("first_seen_seq").get<std::int64_t>();
}

void to_json(nlohmann::json& j, const ProvEdge& e) {
  j = {{"src", e.src},     {"dst", e.dst},
       {"itype", e.itype}, {"time", e.time ? nlohmann::json(*e.time) : nlohmann::json()},
       {"count", e.count}, {"source_log_ids", e.source_log_ids},
       {"first_seq", e.first_seq}};
}

void from_json(const nlohmann::json& j, ProvEdge& e) {
  e.src = j.at("src").get<std::string>();
  e.dst = j.at("dst").get<std::string>();
  e.itype = j.at("itype").get<std::string>();
  const auto& t = j.at("time");
  e.time = t.is_null() ? std::nullopt : std::optional(t.get<Timestamp>());
  e.count = j.at("count").get<std::int64_t>();
  e.source_log_ids = j.at("source_log_ids").get<std::vector<std::string>>();
  e.first_seq = j.at("first_seq").get<std::int64_t>();
  if (e.count < 1) throw ParseError("edge count must be >= 1");
}

std::string ProvenanceGraph::bucket_of(const std::optional<Timestamp>& t) const {
  if (!t) return "none";
  if (t->epoch_micros) {
    auto b = options_.bucket_micros > 0 ? options_.bucket_micros : 1;
    auto v = *t->epoch_micros;
    auto q = v / b - ((v % b != 0) && (v < 0));
    return "e:" + std::to_string(q);
  }
  return "r:" + t->raw;
}

EntityNode& ProvenanceGraph::upsert_node(const std::string& key, std::int64_t seq) {
  auto [it, fresh] = nodes_.try_emplace(key);
  if (fresh) {
    it->second.key = key;
    it->second.first_seen_seq = seq;
  } else {
    it->second.first_seen_seq = std::min(it->second.first_seen_seq, seq);
  }
  return it->second;
}

void ProvenanceGraph::add_edge(ProvEdge e) {
  auto key = std::make_tuple(e.src, e.dst, e.itype, bucket_of(e.time));
  if (auto it = edge_index_.find(key); it != edge_index_.end()) {
    auto& cur = edges_[it->second];
    cur.count += e.count;
    if (e.time && cur.time && e.time->epoch_micros && cur.time->epoch_micros &&
        (*e.time->epoch_micros < *cur.time->epoch_micros ||
         (*e.time->epoch_micros == *cur.time->epoch_micros && e.time->raw < cur.time->raw)))
      cur.time = e.time;
    cur.first_seq = std::min(cur.first_seq, e.first_seq);
    std::vector<std::string> merged = cur.source_log_ids;
    merged.insert(merged.end(), e.source_log_ids.begin(), e.source_log_ids.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    if (merged.size() > options_.max_log_sample) merged.resize(options_.max_log_sample);
    cur.source_log_ids = std::move(merged);
    return;
  }
  upsert_node(e.src, e.first_seq);
  upsert_node(e.dst, e.first_seq);
  const auto idx = edges_.size();
  edge_index_[key] = idx;
  out_[e.src].push_back(idx);
  in_[e.dst].push_back(idx);
  edges_.push_back(std::move(e));
}

namespace {

// The alias recorded for a node, chosen so the key always derives from it.
std::optional<std::string> alias_of(const std::string& key, const std::string& id,
                                    const std::optional<std::string>& name) {
  if (key.rfind("anon:", 0) == 0) return std::nullopt;
  if (key == id) return id;
  return name;
}

}  // namespace

void ProvenanceGraph::add_record(const ProvenanceRecord& r, std::int64_t seq) {
  const auto src = resolve_entity(r, Side::Src);
  const auto dst = resolve_entity(r, Side::Dst);
  auto& s = upsert_node(src, seq);
  if (auto n = alias_of(src, r.sid, r.sname)) s.names.insert(*n);
  if (r.stype) s.coarse_types.insert(*r.stype);
  auto& d = upsert_node(dst, seq);
  if (auto n = alias_of(dst, r.did, r.dname)) d.names.insert(*n);
  if (r.dtype) d.coarse_types.insert(*r.dtype);
  add_edge({src, dst, r.itype, r.time, 1, {r.source_log_id}, seq});
}

const EntityNode* ProvenanceGraph::node(const std::string& key) const {
  auto it = nodes_.find(key);
  return it == nodes_.end() ? nullptr : &it->second;
}

const std::vector<std::size_t>& ProvenanceGraph::in_edges(const std::string& key) const {
  static const std::vector<std::size_t> none;
  auto it = in_.find(key);
  return it == in_.end() ? none : it->second;
}

const std::vector<std::size_t>& ProvenanceGraph::out_edges(const std::string& key) const {
  static const std::vector<std::size_t> none;
  auto it = out_.find(key);
  return it == out_.end() ? none : it->second;
}

std::vector<std::size_t> ProvenanceGraph::time_order() const {
  std::vector<std::size_t> idx(edges_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  auto when = [&](std::size_t i) {
    const auto& t = edges_[i].time;
    return t && t->epoch_micros ? *t->epoch_micros : INT64_MAX;
  };
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return std::make_tuple(when(a), edges_[a].first_seq, a) < std::make_tuple(when(b), edges_[b].first_seq, b);
  });
  return idx;
}

void ProvenanceGraph::save(const std::filesystem::path& nodes_path,
                           const std::filesystem::path& edges_path) const {
  std::vector<EntityNode> ns;
  for (const auto& [_, n] : nodes_) ns.push_back(n);
  write_jsonl(nodes_path, ns);
  write_jsonl(edges_path, edges_);
}

ProvenanceGraph ProvenanceGraph::load(const std::filesystem::path& nodes_path,
                                      const std::filesystem::path& edges_path, GraphOptions options) {
  ProvenanceGraph g(options);
  for (auto& n : read_jsonl<EntityNode>(nodes_path)) g.nodes_[n.key] = std::move(n);
  for (auto& e : read_jsonl<ProvEdge>(edges_path)) {
    if (!g.nodes_.count(e.src) || !g.nodes_.count(e.dst))
      throw ParseError(edges_path.string() + ": edge endpoint missing from nodes");
    g.add_edge(std::move(e));
  }
  return g;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  return "\"" + text::replace_all(std::string(s), "\"", "\"\"") + "\"";
}

std::vector<std::string> parse_csv_line(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

std::string ProvenanceGraph::edge_csv() const {
  std::string out = "src,dst,itype,time,count\n";
  for (auto i : time_order()) {
    const auto& e = edges_[i];
    out += csv_field(e.src) + "," + csv_field(e.dst) + "," + csv_field(e.itype) + "," +
           csv_field(e.time ? e.time->raw : "") + "," + std::to_string(e.count) + "\n";
  }
  return out;
}

ProvenanceGraph build_graph(const std::vector<ProvenanceRecord>& records, GraphOptions options) {
  ProvenanceGraph g(options);
  std::int64_t seq = 0;
  for (const auto& r : records) g.add_record(r, seq++);
  return g;
}

}  // namespace autoprov::graph
