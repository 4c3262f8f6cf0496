#include "autoprov/llm/parse.hpp"

#include <algorithm>
#include <regex>

#include "autoprov/core/error.hpp"
#include "autoprov/core/text.hpp"

namespace autoprov::llm {
namespace {

// Drops markdown bold/heading decoration around a whole line.
std::string_view undecorate(std::string_view line) {
  line = text::trim(line);
  while (!line.empty() && (line.front() == '*' || line.front() == '#')) line.remove_prefix(1);
  while (!line.empty() && line.back() == '*') line.remove_suffix(1);
  return text::trim(line);
}

// Starts-with on a prefix, case-insensitive; returns the remainder.
std::optional<std::string_view> after_prefix(std::string_view line, std::string_view prefix) {
  if (line.size() < prefix.size() || !text::iequals(line.substr(0, prefix.size()), prefix))
    return std::nullopt;
  auto rest = line.substr(prefix.size());
  while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
  return text::trim(rest);
}

}  // namespace

std::string strip_wrapping(std::string_view s) {
  s = text::trim(s);
  if (s.size() >= 4 && s.substr(0, 2) == "**" && s.substr(s.size() - 2) == "**")
    s = text::trim(s.substr(2, s.size() - 4));
  if (s.size() >= 2) {
    char a = s.front(), b = s.back();
    if ((a == '<' && b == '>') || (a == '[' && b == ']') || (a == '"' && b == '"') ||
        (a == '`' && b == '`') || (a == '\'' && b == '\''))
      s = text::trim(s.substr(1, s.size() - 2));
  }
  return std::string(s);
}

SummaryAnnotations parse_summary_annotations(std::string_view t) {
  SummaryAnnotations out;
  std::optional<std::string> last_quote;
  auto close_of = [&](std::size_t open, char c) { return t.find(c, open + 1); };
  for (std::size_t i = 0; i < t.size(); ++i) {
    char c = t[i];
    char closer = c == '"' ? '"' : c == '(' ? ')' : c == '{' ? '}' : c == '[' ? ']' : 0;
    if (!closer) continue;
    auto end = close_of(i, closer);
    if (end == std::string_view::npos) continue;
    std::string inner(text::trim(t.substr(i + 1, end - i - 1)));
    if (!inner.empty()) {
      if (c == '"') {
        last_quote = inner;
      } else if (c == '(') {
        if (std::find(out.ids.begin(), out.ids.end(), inner) == out.ids.end()) {
          out.ids.push_back(inner);
          if (last_quote) out.names.emplace(inner, *last_quote);
        }
      } else if (c == '{') {
        out.itypes.push_back(inner);
      } else {
        out.etypes.push_back(inner);
      }
    }
    i = end;
  }
  return out;
}

EdgeParse parse_edge_lines(std::string_view text_in) {
  static const std::regex line_re(
      R"(^\(\s*([^,()]+?)\s*,\s*([^()]+?)\s*\)\s*A:\s*\[(.*?)\]\s*\{\s*D\s*=\s*(->|<-)\s*\}\s*(?:\(\s*timestamp\s*=\s*(.*)\))?\s*$)");
  EdgeParse out;
  for (const auto& raw : text::split_lines(text_in)) {
    auto line = std::string(undecorate(raw));
    if (line.empty()) continue;
    if (line.find(kNoPairsSentinel) != std::string::npos) {
      out.no_pairs = true;
      continue;
    }
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) {
      out.skipped.push_back(raw);
      continue;
    }
    EdgeLine e;
    e.left_id = m[1].str();
    e.right_id = m[2].str();
    for (auto& a : text::split(m[3].str(), ',')) {
      auto v = strip_wrapping(a);
      if (!v.empty() && v != "...") e.actions.push_back(v);
    }
    if (e.actions.empty()) {
      out.skipped.push_back(raw);
      continue;
    }
    e.direction = m[4].str() == "->" ? Direction::LR : Direction::RL;
    if (m[5].matched) {
      auto ts = std::string(text::trim(m[5].str()));
      if (!ts.empty() && ts != "...") e.timestamp_raw = ts;
    }
    out.edges.push_back(std::move(e));
  }
  if (out.edges.empty() && !out.no_pairs)
    throw ParseError("no well-formed edge line in response:\n" + std::string(text_in));
  return out;
}

KeyValueParse parse_key_value_lines(std::string_view text_in) {
  static const std::regex kv_re(R"re(^"([^"]+)"\s*=\s*(?:"([^"]*)"|([A-Za-z_]+))\s*$)re");
  KeyValueParse out;
  for (const auto& raw : text::split_lines(text_in)) {
    auto line = std::string(undecorate(raw));
    if (line.empty()) continue;
    std::smatch m;
    if (!std::regex_match(line, m, kv_re)) {
      out.skipped.push_back(raw);
      continue;
    }
    std::string key(text::trim(m[1].str()));
    std::string value(text::trim(m[2].matched ? m[2].str() : m[3].str()));
    if (value.empty()) value = std::string(kNone);
    auto it = std::find_if(out.entries.begin(), out.entries.end(),
                           [&](const auto& kv) { return kv.first == key; });
    if (it == out.entries.end())
      out.entries.emplace_back(key, value);
    else if (it->second != value)
      out.conflicts.push_back(key);
  }
  return out;
}

EntitySections parse_entity_sections(std::string_view t) {
  const auto folded = text::casefold(t);
  const auto rel = folded.find("[related entities");
  const auto names = folded.find("[entity names]");
  if (rel == std::string::npos) throw ParseError("missing [RELATED ENTITIES and IP ADDRESSES] section");
  if (names == std::string::npos) throw ParseError("missing [ENTITY NAMES] section");
  EntitySections out;
  auto rel_body_start = t.find(']', rel) + 1;
  auto rel_end = names > rel ? names : t.size();
  auto rel_body = t.substr(rel_body_start, rel_end - rel_body_start);
  static const std::regex pair_re(R"(^\(\s*([^,()]+?)\s*,\s*([^()]+?)\s*\).*$)");
  for (const auto& raw : text::split_lines(rel_body)) {
    auto line = std::string(undecorate(raw));
    if (line.empty()) continue;
    if (line.find(kNoPairsSentinel) != std::string::npos) {
      out.no_pairs = true;
      continue;
    }
    std::smatch m;
    if (std::regex_match(line, m, pair_re)) out.pairs.emplace_back(m[1].str(), m[2].str());
  }
  auto names_body_start = names + std::string_view("[entity names]").size();
  auto names_end = rel > names ? rel : t.size();
  out.names = parse_key_value_lines(t.substr(names_body_start, names_end - names_body_start));
  return out;
}

LabelLine parse_label_line(std::string_view t) {
  static constexpr std::string_view delim = " | Type: ";
  auto pos = t.rfind(delim);
  std::size_t dlen = delim.size();
  if (pos == std::string_view::npos) {
    // Tolerate spacing variants such as "name| Type:label".
    static const std::regex loose(R"(\s*\|\s*Type:\s*)", std::regex::icase);
    std::string s(t);
    std::sregex_iterator it(s.begin(), s.end(), loose), end;
    std::optional<std::smatch> last;
    for (; it != end; ++it) last = *it;
    if (!last) throw ParseError("label line lacks ' | Type: ': " + std::string(t));
    pos = static_cast<std::size_t>(last->position(0));
    dlen = static_cast<std::size_t>(last->length(0));
  }
  auto line_start = t.rfind('\n', pos);
  line_start = line_start == std::string_view::npos ? 0 : line_start + 1;
  auto line_end = t.find('\n', pos + dlen);
  if (line_end == std::string_view::npos) line_end = t.size();

  LabelLine out;
  out.entity_name = std::string(undecorate(t.substr(line_start, pos - line_start)));
  auto label = strip_wrapping(t.substr(pos + dlen, line_end - pos - dlen));
  label = strip_wrapping(label);
  if (!label.empty() && !text::iequals(label, "NO LABEL") && !text::iequals(label, "NO_LABEL"))
    out.label = label;
  return out;
}

std::vector<StageReasoning> parse_stage_reasoning(std::string_view t) {
  std::vector<StageReasoning> out;
  bool in_reasoning = false;
  for (const auto& raw : text::split_lines(t)) {
    auto line = undecorate(raw);
    if (auto stage = after_prefix(line, "Stage:")) {
      out.push_back({strip_wrapping(*stage), "", true});
      in_reasoning = false;
    } else if (auto why = after_prefix(line, "Reasoning:")) {
      if (!out.empty() && out.back().missing_reasoning && out.back().reasoning.empty()) {
        out.back().reasoning = std::string(*why);
        out.back().missing_reasoning = false;
        in_reasoning = true;
      }
    } else if (line.empty()) {
      in_reasoning = false;
    } else if (in_reasoning) {
      out.back().reasoning += ' ';
      out.back().reasoning += line;
    }
  }
  return out;
}

std::optional<bool> parse_yes_no(std::string_view t) {
  auto s = text::casefold(undecorate(t));
  while (!s.empty() && (s.back() == '.' || s.back() == '!')) s.pop_back();
  s = std::string(text::trim(strip_wrapping(s)));
  if (s == "yes") return true;
  if (s == "no") return false;
  return std::nullopt;
}

}  // namespace autoprov::llm
