#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace autoprov::llm {

enum class PromptId {
  P1 = 1,  // log summarization
  P2,      // entity types
  P3,      // related pairs + entity names
  P4,      // edge actions, direction, timestamp
  P5,      // per-field regex induction
  P6,      // functional label
  P7,      // known-entity check
  P8,      // attack summary + tactics
  P9,      // tactic judge
};

inline constexpr PromptId kAllPrompts[] = {PromptId::P1, PromptId::P2, PromptId::P3,
                                           PromptId::P4, PromptId::P5, PromptId::P6,
                                           PromptId::P7, PromptId::P8, PromptId::P9};

std::string_view template_text(PromptId id);
std::string prompt_name(PromptId id);  // "P1".."P9"
std::optional<PromptId> prompt_from_name(std::string_view name);
double default_temperature(PromptId id);

// The text substituted for the platform slot when no "platform" binding is given.
inline constexpr std::string_view kPlatformSlot = "<Platform Name>";

// Placeholder names ({{name}}) in template order, without duplicates.
std::vector<std::string> placeholders(PromptId id);

struct InContextExample {
  std::string input;
  std::string output;
  bool operator==(const InContextExample&) const = default;
};

struct ChatRequest {
  PromptId template_id = PromptId::P1;
  std::map<std::string, std::string> bindings;
  std::vector<InContextExample> in_context_examples;
  double temperature = 0.0;
  int max_tokens = 1024;
  // Distinguishes repeated calls with the same prompt (direction votes).
  int sample_index = 0;

  static ChatRequest make(PromptId id, std::map<std::string, std::string> bindings);
};

// Substitutes every {{name}} verbatim (single pass, values are never
// re-scanned) and the platform slot when a "platform" binding exists.
// Throws Error naming the first unbound placeholder.
std::string render_prompt(const ChatRequest& request);

}  // namespace autoprov::llm
