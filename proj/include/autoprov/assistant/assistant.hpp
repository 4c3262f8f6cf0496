#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "autoprov/detect/detect.hpp"
#include "autoprov/enrich/enrich.hpp"
#include "autoprov/llm/provider.hpp"

namespace autoprov::assistant {

class AssistantError : public Error {
 public:
  AssistantError(const std::string& what, std::string raw) : Error(what), raw_(std::move(raw)) {}
  const std::string& raw_response() const noexcept { return raw_; }

 private:
  std::string raw_;
};

struct LinearizedGraph {
  std::vector<std::string> lines;         // "src --itype--> dst" with optional " (xN)"
  std::vector<std::string> entity_names;  // display names, first appearance order
  std::int64_t total_count = 0;
  std::string text() const;
};

// Consecutive identical (src, dst, itype) edges collapse into one line whose
// suffix carries the summed count.
LinearizedGraph linearize(const detect::AttackGraph& a);

struct Tactic {
  std::string name;
  std::string description;
};

class TacticCatalog {
 public:
  // "name<TAB>description" per line; names unique after case folding.
  static TacticCatalog parse(std::string_view tsv);
  static TacticCatalog bundled();
  static TacticCatalog load(const std::filesystem::path& path);

  const std::vector<Tactic>& tactics() const { return tactics_; }
  const Tactic* find(std::string_view name) const;  // case-insensitive
  std::string names_text() const;                   // one name per line

 private:
  std::vector<Tactic> tactics_;
};

// Prompt-7 per name; anything but YES counts as unknown.
std::set<std::string> flag_unknown_entities(llm::ChatProvider& provider, const std::vector<std::string>& names,
                                            std::vector<std::string>* warnings = nullptr,
                                            std::size_t max_parallel = 4);

inline constexpr std::string_view kUnknownFunctionality = "unknown functionality";

struct ContextEntry {
  std::string entity;
  std::string label;
  bool missing = false;  // no label known
  bool operator==(const ContextEntry&) const = default;
};

// Pairs each unknown display name with its label, looked up by node key.
std::vector<ContextEntry> inject_context(const std::set<std::string>& unknown, const detect::AttackGraph& a,
                                         const enrich::FunctionalityDB& fdb);

struct TacticFinding {
  std::string tactic;
  std::string reasoning;
  bool operator==(const TacticFinding&) const = default;
};

struct AttackSummary {
  std::string summary_text;
  std::vector<TacticFinding> tactics;
  std::vector<ContextEntry> context_injected;
  std::vector<std::string> warnings;
  bool operator==(const AttackSummary&) const = default;
};

void to_json(nlohmann::json& j, const AttackSummary& s);
void from_json(const nlohmann::json& j, AttackSummary& s);

// Text between "Summary:" and the first "Stage:" line, joined into one paragraph.
std::optional<std::string> extract_summary(std::string_view response);

AttackSummary summarize_attack(llm::ChatProvider& provider, const LinearizedGraph& linearized,
                               const std::vector<ContextEntry>& context,
                               const std::vector<std::string>& malicious, const TacticCatalog& catalog);

using Judges = std::array<llm::ChatProvider*, 3>;

// True when at least two judges answer YES. A failing judge votes no.
bool judge_tactic(const Judges& judges, const std::string& tactic, const std::string& reasoning,
                  const TacticCatalog& catalog, std::vector<std::string>* warnings = nullptr);

// Share of accepted tactics; nullopt when the summary has none.
std::optional<double> tactic_correctness(const AttackSummary& summary, const Judges& judges,
                                         const TacticCatalog& catalog,
                                         std::vector<std::string>* warnings = nullptr);

struct ExplainResult {
  LinearizedGraph linearized;
  std::set<std::string> unknown;
  AttackSummary summary;
};

// Linearize, flag unknowns, inject context, summarize.
ExplainResult explain(llm::ChatProvider& provider, const detect::AttackGraph& a,
                      const enrich::FunctionalityDB& fdb, const TacticCatalog& catalog);

std::string render_report(const ExplainResult& r);

}  // namespace autoprov::assistant
