#include "autoprov/llm/prompt.hpp"

#include <algorithm>

#include "autoprov/core/assets.hpp"
#include "autoprov/core/error.hpp"

namespace autoprov::llm {

std::string_view template_text(PromptId id) {
  switch (id) {
    case PromptId::P1: return assets::p1_log_summarization;
    case PromptId::P2: return assets::p2_entity_types;
    case PromptId::P3: return assets::p3_entity_extraction;
    case PromptId::P4: return assets::p4_edge_extraction;
    case PromptId::P5: return assets::p5_rule_generator;
    case PromptId::P6: return assets::p6_functional_label;
    case PromptId::P7: return assets::p7_flag_unknown;
    case PromptId::P8: return assets::p8_attack_summary;
    case PromptId::P9: return assets::p9_judge;
  }
  throw Error("unknown prompt id");
}

std::string prompt_name(PromptId id) { return "P" + std::to_string(static_cast<int>(id)); }

std::optional<PromptId> prompt_from_name(std::string_view name) {
  if (name.size() != 2 || (name[0] != 'P' && name[0] != 'p')) return std::nullopt;
  int n = name[1] - '0';
  if (n < 1 || n > 9) return std::nullopt;
  return static_cast<PromptId>(n);
}

double default_temperature(PromptId id) {
  switch (id) {
    case PromptId::P1:
    case PromptId::P4:
    case PromptId::P8:
      return 0.7;
    default:
      return 0.0;
  }
}

std::vector<std::string> placeholders(PromptId id) {
  std::vector<std::string> out;
  auto t = template_text(id);
  std::size_t pos = 0;
  while ((pos = t.find("{{", pos)) != std::string_view::npos) {
    auto end = t.find("}}", pos + 2);
    if (end == std::string_view::npos) break;
    std::string name(t.substr(pos + 2, end - pos - 2));
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    pos = end + 2;
  }
  return out;
}

ChatRequest ChatRequest::make(PromptId id, std::map<std::string, std::string> bindings) {
  ChatRequest r;
  r.template_id = id;
  r.bindings = std::move(bindings);
  r.temperature = default_temperature(id);
  return r;
}

std::string render_prompt(const ChatRequest& request) {
  const auto t = template_text(request.template_id);
  std::string body;
  body.reserve(t.size() + 256);
  std::size_t pos = 0;
  while (pos < t.size()) {
    auto open = t.find("{{", pos);
    if (open == std::string_view::npos) {
      body.append(t.substr(pos));
      break;
    }
    auto close = t.find("}}", open + 2);
    if (close == std::string_view::npos) {
      body.append(t.substr(pos));
      break;
    }
    body.append(t.substr(pos, open - pos));
    std::string name(t.substr(open + 2, close - open - 2));
    auto it = request.bindings.find(name);
    if (it == request.bindings.end())
      throw Error("prompt " + prompt_name(request.template_id) + ": missing binding '" + name + "'");
    body += it->second;
    pos = close + 2;
  }
  if (auto it = request.bindings.find("platform"); it != request.bindings.end()) {
    // Only the template's own slot; bound values were already spliced in.
    auto slot = t.find(kPlatformSlot);
    if (slot != std::string_view::npos) {
      auto at = body.find(kPlatformSlot);
      if (at != std::string::npos) body.replace(at, kPlatformSlot.size(), it->second);
    }
  }

  std::string out;
  for (const auto& ex : request.in_context_examples) {
    out += "Example input:\n";
    out += ex.input;
    out += "\n\nExample output:\n";
    out += ex.output;
    out += "\n\n";
  }
  out += body;
  return out;
}

}  // namespace autoprov::llm
