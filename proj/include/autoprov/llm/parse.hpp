#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace autoprov::llm {

inline constexpr std::string_view kNoPairsSentinel = "[NO MEANINGFUL PAIRS POSSIBLE]";
inline constexpr std::string_view kNone = "NONE";

struct SummaryAnnotations {
  std::map<std::string, std::string> names;  // id -> nearest preceding quoted name
  std::vector<std::string> ids;              // first-appearance order, unique
  std::vector<std::string> itypes;
  std::vector<std::string> etypes;
};

SummaryAnnotations parse_summary_annotations(std::string_view text);

enum class Direction { LR, RL };

struct EdgeLine {
  std::string left_id;
  std::string right_id;
  std::vector<std::string> actions;
  Direction direction = Direction::LR;
  std::optional<std::string> timestamp_raw;
  bool operator==(const EdgeLine&) const = default;
};

struct EdgeParse {
  std::vector<EdgeLine> edges;
  std::vector<std::string> skipped;  // non-blank lines that did not parse
  bool no_pairs = false;             // sentinel seen
};

// Throws ParseError (carrying the raw text) when no line is well formed and
// the no-pairs sentinel is absent.
EdgeParse parse_edge_lines(std::string_view text);

// `"ID" = "value"` / `"ID" = NONE` lines. First occurrence of an id wins.
struct KeyValueParse {
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::string> conflicts;  // ids seen again with a different value
  std::vector<std::string> skipped;
};

KeyValueParse parse_key_value_lines(std::string_view text);

struct EntitySections {
  std::vector<std::pair<std::string, std::string>> pairs;
  KeyValueParse names;
  bool no_pairs = false;
};

// Throws ParseError when either section header is missing.
EntitySections parse_entity_sections(std::string_view text);

struct LabelLine {
  std::string entity_name;
  std::optional<std::string> label;  // nullopt for NO LABEL
};

// Throws ParseError when no " | Type: " delimiter exists.
LabelLine parse_label_line(std::string_view text);

struct StageReasoning {
  std::string tactic;
  std::string reasoning;
  bool missing_reasoning = false;
};

std::vector<StageReasoning> parse_stage_reasoning(std::string_view text);

// YES/NO after trimming, case folding and dropping trailing punctuation.
std::optional<bool> parse_yes_no(std::string_view text);

// Removes one layer of <...>, [...], "..." or **...** around a value.
std::string strip_wrapping(std::string_view s);

}  // namespace autoprov::llm
