#include "autoprov/enrich/enrich.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "autoprov/core/jsonl.hpp"
#include "autoprov/core/parallel.hpp"
#include "autoprov/core/text.hpp"
#include "autoprov/enrich/normalize.hpp"
#include "autoprov/llm/parse.hpp"

namespace autoprov::enrich {

std::string to_string(LabelSource s) {
  switch (s) {
    case LabelSource::LLM: return "LLM";
    case LabelSource::Behavioral: return "Behavioral";
    case LabelSource::Manual: return "Manual";
  }
  return "LLM";
}

LabelSource label_source_from_string(std::string_view s) {
  if (s == "LLM") return LabelSource::LLM;
  if (s == "Behavioral") return LabelSource::Behavioral;
  if (s == "Manual") return LabelSource::Manual;
  throw ParseError("unknown label provenance: " + std::string(s));
}

std::optional<LabelEntry> FunctionalityDB::get(const std::string& name) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(name);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

bool FunctionalityDB::put(const std::string& name, const std::string& label, LabelSource source) {
  if (text::trim(label).empty()) return false;
  std::lock_guard lock(mu_);
  auto [it, fresh] = entries_.try_emplace(name, LabelEntry{label, source});
  if (fresh) return true;
  if (it->second.label == label) return true;
  if (source != LabelSource::Manual) return false;
  it->second = {label, source};
  return true;
}

std::size_t FunctionalityDB::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::map<std::string, LabelEntry> FunctionalityDB::snapshot() const {
  std::lock_guard lock(mu_);
  return entries_;
}

void FunctionalityDB::save(const std::filesystem::path& path) const {
  std::vector<nlohmann::json> rows;
  for (const auto& [name, e] : snapshot())
    rows.push_back({{"name", name}, {"label", e.label}, {"source", to_string(e.source)}});
  write_jsonl(path, rows);
}

FunctionalityDB FunctionalityDB::load(const std::filesystem::path& path) {
  FunctionalityDB db;
  std::size_t line = 0;
  for (const auto& j : read_jsonl_values(path)) {
    ++line;
    try {
      auto label = j.at("label").get<std::string>();
      if (label.empty()) throw ParseError("empty label");
      db.entries_[j.at("name").get<std::string>()] = {
          label, label_source_from_string(j.at("source").get<std::string>())};
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line);
    }
  }
  return db;
}

void FunctionalityDB::load_manual(const std::filesystem::path& path) {
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(read_text(path))) {
    ++line_no;
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(path.string() + ": expected name<TAB>label", line_no);
    auto name = std::string(text::trim(line.substr(0, tab)));
    auto label = std::string(text::trim(line.substr(tab + 1)));
    if (name.empty() || label.empty()) throw ParseError(path.string() + ": empty name or label", line_no);
    put(is_endpoint(name) ? name : normalize_entity_name(name), label, LabelSource::Manual);
  }
}

std::string to_string(const BehavioralSignature& s) {
  return std::string(s.direction == Direction::In ? "IN" : "OUT") + "|" + s.itype + "|" + s.neighbor_label;
}

void to_json(nlohmann::json& j, const BehavioralSignature& s) {
  j = {{"direction", s.direction == Direction::In ? "IN" : "OUT"},
       {"itype", s.itype},
       {"neighbor_label", s.neighbor_label}};
}

void from_json(const nlohmann::json& j, BehavioralSignature& s) {
  auto d = j.at("direction").get<std::string>();
  if (d != "IN" && d != "OUT") throw ParseError("bad signature direction: " + d);
  s.direction = d == "IN" ? Direction::In : Direction::Out;
  s.itype = j.at("itype").get<std::string>();
  s.neighbor_label = j.at("neighbor_label").get<std::string>();
  if (s.itype.empty() || s.neighbor_label.empty()) throw ParseError("empty signature component");
}

std::optional<std::size_t> SignatureIndex::find(const BehavioralSignature& s) const {
  auto it = pos_.find(s);
  if (it == pos_.end()) return std::nullopt;
  return it->second;
}

std::size_t SignatureIndex::add(const BehavioralSignature& s) {
  auto [it, fresh] = pos_.try_emplace(s, list_.size());
  if (fresh) list_.push_back(s);
  return it->second;
}

void SignatureIndex::save(const std::filesystem::path& path) const { write_jsonl(path, list_); }

SignatureIndex SignatureIndex::load(const std::filesystem::path& path) {
  SignatureIndex idx;
  for (const auto& s : read_jsonl<BehavioralSignature>(path)) {
    if (idx.find(s)) throw ParseError(path.string() + ": duplicate signature " + to_string(s));
    idx.add(s);
  }
  return idx;
}

void BehavioralDB::put(const std::string& key, MultiHot vector, std::string label) {
  entries_[key] = {std::move(vector), std::move(label)};
}

void BehavioralDB::save(const std::filesystem::path& path) const {
  std::vector<nlohmann::json> rows;
  for (const auto& [key, e] : entries_) {
    std::vector<std::size_t> ones;
    for (std::size_t i = 0; i < e.vector.size(); ++i)
      if (e.vector[i]) ones.push_back(i);
    rows.push_back({{"key", key}, {"label", e.label}, {"dimension", e.vector.size()}, {"ones", ones}});
  }
  write_jsonl(path, rows);
}

BehavioralDB BehavioralDB::load(const std::filesystem::path& path) {
  BehavioralDB db;
  std::size_t line = 0;
  for (const auto& j : read_jsonl_values(path)) {
    ++line;
    try {
      MultiHot v(j.at("dimension").get<std::size_t>(), 0);
      for (auto i : j.at("ones").get<std::vector<std::size_t>>()) {
        if (i >= v.size()) throw ParseError("bit index out of range");
        v[i] = 1;
      }
      db.put(j.at("key").get<std::string>(), std::move(v), j.at("label").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line);
    }
  }
  return db;
}

std::set<BehavioralSignature> behavioral_profile(const graph::ProvenanceGraph& g,
                                                 const std::string& key, const LabelMap& labels) {
  std::set<BehavioralSignature> out;
  const auto& edges = g.edges();
  for (auto i : g.in_edges(key)) {
    auto it = labels.find(edges[i].src);
    if (it != labels.end()) out.insert({Direction::In, edges[i].itype, it->second});
  }
  for (auto i : g.out_edges(key)) {
    auto it = labels.find(edges[i].dst);
    if (it != labels.end()) out.insert({Direction::Out, edges[i].itype, it->second});
  }
  return out;
}

std::set<BehavioralSignature> behavioral_profile(const graph::ProvenanceGraph& g,
                                                 const std::string& key) {
  LabelMap labels;
  for (const auto& [k, n] : g.nodes())
    if (n.functional_label) labels[k] = *n.functional_label;
  return behavioral_profile(g, key, labels);
}

MultiHot profile_vector(const std::set<BehavioralSignature>& profile, SignatureIndex& index, bool grow) {
  if (grow)
    for (const auto& s : profile) index.add(s);
  return profile_vector(profile, static_cast<const SignatureIndex&>(index));
}

MultiHot profile_vector(const std::set<BehavioralSignature>& profile, const SignatureIndex& index) {
  MultiHot v(index.dimension(), 0);
  for (const auto& s : profile)
    if (auto i = index.find(s)) v[*i] = 1;
  return v;
}

double multi_hot_cosine(const MultiHot& a, const MultiHot& b) {
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
    bool x = i < a.size() && a[i];
    bool y = i < b.size() && b[i];
    na += x;
    nb += y;
    both += x && y;
  }
  if (!na || !nb) return 0.0;
  return static_cast<double>(both) / std::sqrt(static_cast<double>(na) * static_cast<double>(nb));
}

Classification classify_unknown(const MultiHot& query, const BehavioralDB& db) {
  if (db.empty()) throw NoReferenceError("no reference entities in the behavioral database");
  if (std::none_of(query.begin(), query.end(), [](auto b) { return b != 0; }))
    throw NoEvidenceError("no behavioral evidence: query vector is all zero");
  // Cosines are compared exactly as dot^2 / (|q| |r|) on integers, so equal
  // similarities tie regardless of floating-point rounding.
  auto ones = [](const MultiHot& v) {
    return static_cast<std::uint64_t>(std::count_if(v.begin(), v.end(), [](auto b) { return b != 0; }));
  };
  const std::uint64_t nq = ones(query);
  std::optional<Classification> best;
  unsigned __int128 best_num = 0, best_den = 1;
  for (const auto& [key, e] : db.entries()) {  // keys ascend, so strict > keeps the smallest on ties
    std::uint64_t dot = 0;
    for (std::size_t i = 0; i < std::min(query.size(), e.vector.size()); ++i) dot += (query[i] && e.vector[i]);
    const std::uint64_t nr = ones(e.vector);
    unsigned __int128 num = static_cast<unsigned __int128>(dot) * dot;
    unsigned __int128 den = nr ? static_cast<unsigned __int128>(nq) * nr : 1;
    if (!best || num * best_den > best_num * den) {
      best = Classification{e.label, key, multi_hot_cosine(query, e.vector)};
      best_num = num;
      best_den = den;
    }
  }
  return *best;
}

std::optional<std::string> label_name(const graph::EntityNode& node) {
  if (node.key.rfind("anon:", 0) == 0) return std::nullopt;
  return node.key;
}

std::optional<std::string> infer_label_llm(llm::ChatProvider& provider, const std::string& name,
                                           FunctionalityDB& fdb, std::vector<std::string>* warnings,
                                           std::size_t* provider_calls) {
  if (auto hit = fdb.get(name)) return hit->label;
  if (provider_calls) ++*provider_calls;
  try {
    auto reply = provider.complete(llm::ChatRequest::make(llm::PromptId::P6, {{"entity", name}}));
    auto parsed = llm::parse_label_line(reply);
    if (!parsed.label) return std::nullopt;
    if (!fdb.put(name, *parsed.label, LabelSource::LLM)) {
      if (warnings) warnings->push_back("kept existing label for " + name);
      return fdb.get(name)->label;
    }
    return parsed.label;
  } catch (const Error& e) {
    if (warnings) warnings->push_back("labeling " + name + " failed: " + e.what());
    return std::nullopt;
  }
}

SweepOutcome classify_pending(const graph::ProvenanceGraph& g, std::vector<std::string> pending,
                              LabelMap& labels, BehavioralDB& bdb, const SignatureIndex& index, int max_sweeps) {
  SweepOutcome out;
  // Each sweep reads the labels left by the previous one.
  while (!pending.empty() && out.sweeps < max_sweeps) {
    ++out.sweeps;
    std::vector<std::pair<std::string, Classification>> found;
    std::vector<std::string> still;
    for (const auto& key : pending) {
      auto v = profile_vector(behavioral_profile(g, key, labels), index);
      try {
        found.emplace_back(key, classify_unknown(v, bdb));
      } catch (const NoEvidenceError&) {
        still.push_back(key);
      } catch (const NoReferenceError&) {
        still.push_back(key);
      }
    }
    std::vector<std::pair<std::string, MultiHot>> vectors;
    for (const auto& [key, _] : found)
      vectors.emplace_back(key, profile_vector(behavioral_profile(g, key, labels), index));
    for (std::size_t i = 0; i < found.size(); ++i) {
      const auto& [key, c] = found[i];
      labels[key] = c.label;
      bdb.put(key, std::move(vectors[i].second), c.label);
      out.classified.emplace(key, c);
    }
    pending = std::move(still);
    if (found.empty()) break;
  }
  out.remaining = std::move(pending);
  return out;
}

EnrichResult enrich_graph(graph::ProvenanceGraph& g, llm::ChatProvider& provider,
                          const embed::EmbeddingProvider& embedder, FunctionalityDB& fdb,
                          BehavioralDB& bdb, SignatureIndex& index, const EnrichOptions& options) {
  EnrichResult out;

  // Pass 1: cache-first LLM labels for named nodes. Calls run in parallel;
  // results are applied in key order.
  std::vector<std::string> named;
  for (const auto& [key, n] : g.nodes()) {
    auto name = label_name(n);
    if (!name) {
      if (auto hit = fdb.get(key)) out.labels[key] = hit->label;
      continue;
    }
    if (auto hit = fdb.get(*name)) {
      out.labels[key] = hit->label;
    } else {
      named.push_back(key);
    }
  }
  std::vector<std::optional<std::string>> answers(named.size());
  std::vector<std::string> errors(named.size());
  parallel_for(named.size(), options.max_parallel, [&](std::size_t i) {
    try {
      auto reply = provider.complete(llm::ChatRequest::make(llm::PromptId::P6, {{"entity", named[i]}}));
      answers[i] = llm::parse_label_line(reply).label;
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  out.provider_calls = named.size();
  for (std::size_t i = 0; i < named.size(); ++i) {
    if (!errors[i].empty()) {
      out.warnings.push_back("labeling " + named[i] + " failed: " + errors[i]);
      continue;
    }
    if (!answers[i]) continue;
    if (!fdb.put(named[i], *answers[i], LabelSource::LLM))
      out.warnings.push_back("kept existing label for " + named[i]);
    out.labels[named[i]] = fdb.get(named[i])->label;
  }

  // Pass 2: reference vectors for every labeled node.
  for (const auto& [key, label] : out.labels)
    bdb.put(key, profile_vector(behavioral_profile(g, key, out.labels), index, true), label);

  // Pass 3: behavioral classification of unlabeled, connected nodes.
  std::vector<std::string> pending;
  for (const auto& [key, _] : g.nodes())
    if (!out.labels.count(key) && (!g.in_edges(key).empty() || !g.out_edges(key).empty()))
      pending.push_back(key);
  auto swept = classify_pending(g, pending, out.labels, bdb, index, options.max_sweeps);
  out.sweeps = swept.sweeps;
  for (const auto& [key, c] : swept.classified) {
    if (!fdb.put(key, c.label, LabelSource::Behavioral)) {
      out.warnings.push_back("kept existing label for " + key);
      out.labels[key] = fdb.get(key)->label;
    }
    ++out.behavioral_classifications;
  }

  for (const auto& [key, _] : g.nodes())
    if (!out.labels.count(key)) out.unlabeled.push_back(key);
  for (auto& [key, n] : g.mutable_nodes()) {
    auto it = out.labels.find(key);
    n.functional_label = it == out.labels.end() ? std::nullopt : std::optional(it->second);
  }

  // Pass 4: one embedding per distinct label.
  std::set<std::string> distinct;
  for (const auto& [_, l] : out.labels) distinct.insert(l);
  std::vector<std::string> texts(distinct.begin(), distinct.end());
  if (!texts.empty()) {
    auto vecs = embedder.embed_batch(texts);
    for (std::size_t i = 0; i < texts.size(); ++i) out.label_features.emplace(texts[i], std::move(vecs[i]));
  }
  return out;
}

}  // namespace autoprov::enrich
