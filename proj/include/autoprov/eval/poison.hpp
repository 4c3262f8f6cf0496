#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "autoprov/assistant/assistant.hpp"
#include "autoprov/core/rng.hpp"
#include "autoprov/detect/detect.hpp"
#include "autoprov/embed/embedding.hpp"
#include "autoprov/enrich/enrich.hpp"

namespace autoprov::eval {

struct PoisonPlan {
  double rate = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> mapping;      // original name -> poisoned name
  std::map<std::string, std::string> key_mapping;  // original node key -> poisoned key
};

// max(1, floor(rate * n / 100)).
std::size_t poison_sample_size(double rate, std::size_t n);

// Replaces every alphanumeric run with a random run of the same length
// ([a-z0-9], letter first). Separators and the final extension are kept.
std::string poison_name(std::string_view name, Rng& rng);

// Names eligible for poisoning: display names of non-anonymous, non-endpoint nodes.
std::vector<std::string> poisonable_names(const detect::AttackGraph& a);

struct PoisonResult {
  PoisonPlan plan;
  detect::AttackGraph graph;
};

// Samples the names to poison and rewrites the attack graph. Poisoned nodes
// lose their labels. Throws for rates outside [0, 100].
PoisonResult poison_names(const detect::AttackGraph& a, double rate, std::uint64_t seed);

// Applies a key mapping to a whole provenance graph.
graph::ProvenanceGraph rename_nodes(const graph::ProvenanceGraph& g, const PoisonPlan& plan);

// Cosine similarity of the two texts' embeddings.
double summary_similarity(const embed::EmbeddingProvider& embedder, std::string_view original,
                          std::string_view poisoned);

struct SweepContext {
  const graph::ProvenanceGraph* graph = nullptr;  // full enriched graph
  const detect::AttackGraph* attack = nullptr;
  const enrich::FunctionalityDB* fdb = nullptr;
  const enrich::BehavioralDB* bdb = nullptr;
  const enrich::SignatureIndex* index = nullptr;
  llm::ChatProvider* assistant = nullptr;
  std::optional<assistant::Judges> judges;
  const embed::EmbeddingProvider* embedder = nullptr;
  const assistant::TacticCatalog* catalog = nullptr;
  int max_sweeps = 0;  // 0: sweep until no further entity can be labeled
};

struct SweepRow {
  double rate = 0;
  std::size_t poisoned = 0;
  std::size_t relabeled = 0;  // poisoned entities given a behavioral label
  std::optional<double> alpha_tc;
  std::optional<double> alpha_r;
  std::optional<double> similarity;
  std::string error;
};

void to_json(nlohmann::json& j, const SweepRow& r);

// Per rate: poison, reclassify poisoned entities behaviorally, re-run the
// assistant and compare against the unpoisoned run. A failing rate records
// its error and the sweep continues.
std::vector<SweepRow> robustness_sweep(const SweepContext& ctx, const std::vector<double>& rates,
                                       std::uint64_t seed);

}  // namespace autoprov::eval
