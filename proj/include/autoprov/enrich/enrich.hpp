#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "autoprov/embed/embedding.hpp"
#include "autoprov/graph/graph.hpp"
#include "autoprov/llm/provider.hpp"

namespace autoprov::enrich {

enum class LabelSource { LLM, Behavioral, Manual };
std::string to_string(LabelSource s);
LabelSource label_source_from_string(std::string_view s);

struct LabelEntry {
  std::string label;
  LabelSource source = LabelSource::LLM;
  bool operator==(const LabelEntry&) const = default;
};

// Normalized entity name -> functional label. Entries are never relabeled
// except by a Manual write. Thread-safe.
class FunctionalityDB {
 public:
  FunctionalityDB() = default;
  FunctionalityDB(const FunctionalityDB& o) : entries_(o.snapshot()) {}
  FunctionalityDB& operator=(const FunctionalityDB& o) {
    auto copy = o.snapshot();
    std::lock_guard lock(mu_);
    entries_ = std::move(copy);
    return *this;
  }

  std::optional<LabelEntry> get(const std::string& name) const;
  // Returns false (and keeps the old entry) when `name` already carries a
  // different label and `source` is not Manual. Empty labels are rejected.
  bool put(const std::string& name, const std::string& label, LabelSource source);
  std::size_t size() const;
  std::map<std::string, LabelEntry> snapshot() const;

  void save(const std::filesystem::path& path) const;
  static FunctionalityDB load(const std::filesystem::path& path);
  // "name<TAB>label" lines, written with Manual provenance. Names are normalized.
  void load_manual(const std::filesystem::path& path);

 private:
  mutable std::mutex mu_;
  std::map<std::string, LabelEntry> entries_;
};

enum class Direction { In, Out };

struct BehavioralSignature {
  Direction direction = Direction::In;
  std::string itype;
  std::string neighbor_label;
  auto operator<=>(const BehavioralSignature&) const = default;
  bool operator==(const BehavioralSignature&) const = default;
};

std::string to_string(const BehavioralSignature& s);
void to_json(nlohmann::json& j, const BehavioralSignature& s);
void from_json(const nlohmann::json& j, BehavioralSignature& s);

// Append-only registry of signatures; index = dimension.
class SignatureIndex {
 public:
  std::optional<std::size_t> find(const BehavioralSignature& s) const;
  std::size_t add(const BehavioralSignature& s);
  std::size_t dimension() const { return list_.size(); }
  const std::vector<BehavioralSignature>& signatures() const { return list_; }

  void save(const std::filesystem::path& path) const;
  static SignatureIndex load(const std::filesystem::path& path);

 private:
  std::vector<BehavioralSignature> list_;
  std::map<BehavioralSignature, std::size_t> pos_;
};

using MultiHot = std::vector<std::uint8_t>;

struct BehavioralEntry {
  MultiHot vector;
  std::string label;
};

class BehavioralDB {
 public:
  void put(const std::string& key, MultiHot vector, std::string label);
  const std::map<std::string, BehavioralEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  void save(const std::filesystem::path& path) const;
  static BehavioralDB load(const std::filesystem::path& path);

 private:
  std::map<std::string, BehavioralEntry> entries_;
};

using LabelMap = std::map<std::string, std::string>;  // node key -> label

std::set<BehavioralSignature> behavioral_profile(const graph::ProvenanceGraph& g,
                                                 const std::string& key, const LabelMap& labels);
// Uses the labels stored on the graph's nodes.
std::set<BehavioralSignature> behavioral_profile(const graph::ProvenanceGraph& g,
                                                 const std::string& key);

// grow=true registers unseen signatures; grow=false drops them.
MultiHot profile_vector(const std::set<BehavioralSignature>& profile, SignatureIndex& index, bool grow);
MultiHot profile_vector(const std::set<BehavioralSignature>& profile, const SignatureIndex& index);

// Cosine of two {0,1} vectors; the shorter one is zero-extended. 0 if either is zero.
double multi_hot_cosine(const MultiHot& a, const MultiHot& b);

class NoReferenceError : public Error {
 public:
  using Error::Error;
};
class NoEvidenceError : public Error {
 public:
  using Error::Error;
};

struct Classification {
  std::string label;
  std::string reference_key;
  double similarity = 0;
};

// Nearest reference by cosine; ties go to the smallest key.
Classification classify_unknown(const MultiHot& query, const BehavioralDB& db);

// Prompt-6 labeling with the cache consulted first. Provider and parse errors
// fall back to no label with a warning.
std::optional<std::string> infer_label_llm(llm::ChatProvider& provider, const std::string& name,
                                           FunctionalityDB& fdb,
                                           std::vector<std::string>* warnings = nullptr,
                                           std::size_t* provider_calls = nullptr);

struct SweepOutcome {
  std::map<std::string, Classification> classified;
  std::vector<std::string> remaining;
  int sweeps = 0;
};

// Classifies `pending` nodes by their labeled neighbors for at most
// `max_sweeps` rounds. New labels go into `labels` and `bdb`.
SweepOutcome classify_pending(const graph::ProvenanceGraph& g, std::vector<std::string> pending,
                              LabelMap& labels, BehavioralDB& bdb, const SignatureIndex& index, int max_sweeps);

struct EnrichOptions {
  int max_sweeps = 3;
  std::size_t max_parallel = 4;
};

struct EnrichResult {
  LabelMap labels;
  std::map<std::string, embed::Embedding> label_features;  // distinct label -> embedding
  std::vector<std::string> unlabeled;                       // sorted node keys
  std::size_t provider_calls = 0;
  std::size_t behavioral_classifications = 0;
  int sweeps = 0;
  std::vector<std::string> warnings;
};

// Labels every node it can and writes the labels onto the graph's nodes.
// Passes: LLM labels for named nodes, reference vectors from labeled nodes,
// behavioral classification of the rest (bounded sweeps), label embeddings.
EnrichResult enrich_graph(graph::ProvenanceGraph& g, llm::ChatProvider& provider,
                          const embed::EmbeddingProvider& embedder, FunctionalityDB& fdb,
                          BehavioralDB& bdb, SignatureIndex& index, const EnrichOptions& options = {});

// Label key used for Prompt 6 and the functionality database, or nullopt for
// anonymous nodes.
std::optional<std::string> label_name(const graph::EntityNode& node);

}  // namespace autoprov::enrich
