#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "autoprov/core/records.hpp"
#include "autoprov/llm/provider.hpp"
#include "json.hpp"

namespace autoprov::rules {

enum class Field { Sid, Stype, Sname, Did, Dtype, Dname, Itype, Time };

inline constexpr std::array<Field, 8> kAllFields = {Field::Sid, Field::Stype, Field::Sname,
                                                    Field::Did, Field::Dtype, Field::Dname,
                                                    Field::Itype, Field::Time};

std::string field_name(Field f);
std::optional<Field> field_from_name(std::string_view name);
// "TASK 1" identifiers/types, "TASK 2" interaction type, "TASK 3" timestamp, "TASK 4" names.
std::string task_for(Field f);
bool is_mandatory(Field f);

// The record's value for a field (time uses the raw string).
std::optional<std::string> field_value(const ProvenanceRecord& r, Field f);

struct FieldRule {
  std::string pattern;
  // Log token -> record value, for values that never appear verbatim in the
  // log (normalized entity types such as "file" for "FileObject").
  std::map<std::string, std::string> token_map;
  bool operator==(const FieldRule&) const = default;
};

struct RuleSet {
  std::string rule_id;  // digest of the field -> pattern tuple
  std::int64_t cluster_id = 0;
  std::map<Field, FieldRule> fields;
  std::string source_log_id;
  std::string source_record_fingerprint;
  bool operator==(const RuleSet&) const = default;
};

void to_json(nlohmann::json& j, const RuleSet& r);
void from_json(const nlohmann::json& j, RuleSet& r);

std::string compute_rule_id(const std::map<Field, FieldRule>& fields);
std::string record_fingerprint(const ProvenanceRecord& r);

struct SyntaxCheck {
  bool ok = true;
  std::string cause;
};

// Portable subset: one unnamed capturing group, no backreferences, no
// lookaround, no named groups, no bare ".+"/".*" capture.
SyntaxCheck check_syntax(const std::string& pattern);

struct Induced {
  std::optional<std::string> pattern;  // nullopt: the model answered No Regex
  std::optional<std::string> token;
};

Induced parse_rule_response(std::string_view text);

Induced induce_field_rule(llm::ChatProvider& provider, const std::string& log, Field field,
                          const std::string& value, const std::string& feedback = "none",
                          const std::string& platform = "");

// True iff the first match's capture equals `token` when given, else `expected`.
SyntaxCheck validate_rule(const std::string& pattern, const std::string& log,
                          const std::string& expected,
                          const std::optional<std::string>& token = std::nullopt);

struct BuildOutcome {
  std::optional<RuleSet> rule;
  std::map<Field, std::string> report;  // per-field failure causes
};

BuildOutcome build_ruleset(llm::ChatProvider& provider, const std::string& log,
                           const ProvenanceRecord& record, std::int64_t cluster_id,
                           int max_repair = 1, const std::string& platform = "");

// A RuleSet with its patterns compiled.
class CompiledRuleSet {
 public:
  explicit CompiledRuleSet(RuleSet rule);
  ~CompiledRuleSet();
  CompiledRuleSet(CompiledRuleSet&&) noexcept;
  CompiledRuleSet& operator=(CompiledRuleSet&&) noexcept;

  const RuleSet& rule() const { return rule_; }
  // First match per pattern; nullopt unless Sid, Did and Itype all match.
  std::optional<ProvenanceRecord> apply(const std::string& log, const std::string& log_id) const;

 private:
  struct Impl;
  RuleSet rule_;
  std::unique_ptr<Impl> impl_;
};

std::optional<ProvenanceRecord> apply_ruleset(const RuleSet& rule, const std::string& log,
                                              const std::string& log_id);

class RuleDB {
 public:
  // Returns false when an identical pattern tuple already exists; the
  // stored token maps then absorb any new token -> value pairs.
  bool insert(RuleSet rule);

  const std::vector<CompiledRuleSet>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }

  // Cluster rules first; all other rules only when none of those matched.
  // Records equal on every field except origin are reported once.
  std::vector<ProvenanceRecord> apply(const std::string& log, const std::string& log_id,
                                      std::int64_t cluster_id) const;

  void save(const std::filesystem::path& path) const;
  static RuleDB load(const std::filesystem::path& path);

 private:
  std::vector<CompiledRuleSet> rules_;
  std::map<std::string, std::size_t> by_id_;
  std::map<std::int64_t, std::vector<std::size_t>> by_cluster_;
};

}  // namespace autoprov::rules
