#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "autoprov/cluster/cluster.hpp"
#include "autoprov/core/records.hpp"
#include "autoprov/llm/parse.hpp"
#include "autoprov/llm/provider.hpp"
#include "json.hpp"

namespace autoprov::cpe {

// A per-log extraction failure; `stage` names the subtask.
class ExtractionError : public Error {
 public:
  ExtractionError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

using IdPair = std::pair<std::string, std::string>;
using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct CpeEdge {
  std::string sid;
  std::string did;
  std::string itype;
  std::optional<std::string> time_raw;
  bool operator==(const CpeEdge&) const = default;
};

struct CpeOutput {
  std::string log_id;
  std::string summary;
  KeyValues entity_types;  // id -> type or NONE, first occurrence wins
  KeyValues entity_names;  // id -> name or NONE
  std::vector<IdPair> pairs;
  std::vector<CpeEdge> edges;
};

void to_json(nlohmann::json& j, const CpeOutput& o);

struct SkipEntry {
  std::string log_id;
  std::string stage;
  std::string cause;
  bool operator==(const SkipEntry&) const = default;
};

void to_json(nlohmann::json& j, const SkipEntry& s);
void from_json(const nlohmann::json& j, SkipEntry& s);

// Bounded per-template store of earlier successful exchanges.
class InContextPool {
 public:
  InContextPool(std::size_t capacity = 8, std::size_t sample_size = 2, std::uint64_t seed = 0)
      : capacity_(capacity), sample_size_(sample_size), seed_(seed) {}

  void add(llm::PromptId id, llm::InContextExample example);
  std::vector<llm::InContextExample> sample(llm::PromptId id);
  std::size_t size(llm::PromptId id) const;

 private:
  struct Slot {
    std::vector<llm::InContextExample> items;
    std::uint64_t seen = 0;
    std::uint64_t draws = 0;
  };
  std::size_t capacity_;
  std::size_t sample_size_;
  std::uint64_t seed_;
  std::map<llm::PromptId, Slot> slots_;
  mutable std::mutex mu_;
};

struct CpeConfig {
  std::string platform;  // empty: leave the template's platform slot
  int n_votes = 7;
  std::size_t max_parallel = 4;
  std::uint64_t seed = 0;
};

std::string summarize_log(llm::ChatProvider& provider, const std::string& log,
                          const CpeConfig& config,
                          std::vector<llm::InContextExample> examples = {});

struct TypesResult {
  KeyValues types;
  std::vector<std::string> conflicts;
};

TypesResult extract_entity_types(llm::ChatProvider& provider, const std::string& log,
                                 const std::string& summary, const CpeConfig& config,
                                 std::vector<llm::InContextExample> examples = {});

struct EntitiesResult {
  std::vector<IdPair> pairs;
  KeyValues names;
  std::vector<std::string> conflicts;
};

EntitiesResult extract_entities(llm::ChatProvider& provider, const std::string& log,
                                const std::string& summary, const CpeConfig& config,
                                std::vector<llm::InContextExample> examples = {});

struct VoteResult {
  std::vector<CpeEdge> edges;
  int valid_runs = 0;
  std::vector<std::string> warnings;  // ties, dropped pairs, failed runs
};

// Direction voting over `config.n_votes` independent runs. Requested pairs
// fix the orientation; a run answering (B, A) for (A, B) is flipped.
VoteResult extract_edges_voted(llm::ChatProvider& provider, const std::string& log,
                               const std::string& summary, const std::vector<IdPair>& pairs,
                               const CpeConfig& config,
                               std::vector<llm::InContextExample> examples = {});

// Pure voting core, exposed for tests: one parsed response per valid run.
VoteResult vote_edges(const std::vector<IdPair>& pairs,
                      const std::vector<std::vector<llm::EdgeLine>>& runs);

std::vector<ProvenanceRecord> assemble_records(const CpeOutput& output,
                                               std::vector<std::string>* warnings = nullptr);

struct CpeResult {
  std::map<std::string, std::vector<ProvenanceRecord>> db;
  std::vector<CpeOutput> outputs;
  std::vector<SkipEntry> skips;
};

// Runs the four subtasks for every candidate. Logs are handled in batches of
// `max_parallel`; the pool is fed in candidate order after each batch so the
// result depends only on the inputs and the configuration.
CpeResult run_cpe(llm::ChatProvider& provider, const std::vector<cluster::CandidateEntry>& candidates,
                  InContextPool& pool, const CpeConfig& config);

// Flattens the database in key order.
std::vector<ProvenanceRecord> flatten(const std::map<std::string, std::vector<ProvenanceRecord>>& db);

}  // namespace autoprov::cpe
