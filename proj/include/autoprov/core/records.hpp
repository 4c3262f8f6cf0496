#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "autoprov/core/timestamp.hpp"
#include "json.hpp"

namespace autoprov {

struct LogRecord {
  std::string log_id;
  std::string raw_text;
  std::int64_t arrival_seq = 0;
  std::int64_t window_id = 0;
  std::optional<std::string> source_tag;

  bool operator==(const LogRecord&) const = default;
};

// Where a provenance record came from: the LLM extractor or a distilled rule.
struct Origin {
  enum class Kind { Cpe, Rule };
  Kind kind = Kind::Cpe;
  std::string rule_id;  // set iff kind == Rule

  static Origin cpe() { return {}; }
  static Origin rule(std::string id) { return {Kind::Rule, std::move(id)}; }
  bool operator==(const Origin&) const = default;
};

// One directed interaction extracted from one log entry.
struct ProvenanceRecord {
  std::string sid;
  std::optional<std::string> stype;
  std::optional<std::string> sname;
  std::string did;
  std::optional<std::string> dtype;
  std::optional<std::string> dname;
  std::string itype;
  std::optional<Timestamp> time;
  Origin origin;
  std::string source_log_id;

  bool operator==(const ProvenanceRecord&) const = default;
};

inline constexpr std::string_view kNoLabel = "NO LABEL";

// Same interaction, ignoring origin and source log.
bool same_fields(const ProvenanceRecord& a, const ProvenanceRecord& b);

// Throws ParseError when sid/did/itype are empty.
void validate(const ProvenanceRecord& r);

// One record per non-blank line of a plain-text log, with ids
// "<prefix>-<line number>" and arrival order from 0.
std::vector<LogRecord> read_log_file(const std::filesystem::path& path, const std::string& prefix);

void to_json(nlohmann::json& j, const LogRecord& r);
void from_json(const nlohmann::json& j, LogRecord& r);
void to_json(nlohmann::json& j, const Origin& o);
void from_json(const nlohmann::json& j, Origin& o);
void to_json(nlohmann::json& j, const ProvenanceRecord& r);
void from_json(const nlohmann::json& j, ProvenanceRecord& r);

}  // namespace autoprov
