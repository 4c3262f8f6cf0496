#include "autoprov/assistant/assistant.hpp"

#include "autoprov/core/assets.hpp"
#include "autoprov/core/jsonl.hpp"
#include "autoprov/core/parallel.hpp"
#include "autoprov/core/text.hpp"
#include "autoprov/llm/parse.hpp"

namespace autoprov::assistant {

std::string LinearizedGraph::text() const { return text::join(lines, "\n"); }

LinearizedGraph linearize(const detect::AttackGraph& a) {
  LinearizedGraph out;
  std::set<std::string> seen;
  auto display = [&](const std::string& key) {
    auto it = a.nodes.find(key);
    auto name = it == a.nodes.end() ? key : it->second.display_name();
    if (seen.insert(name).second) out.entity_names.push_back(name);
    return name;
  };
  auto emit = [&](const graph::ProvEdge& e, std::int64_t n) {
    auto src = display(e.src);
    auto line = src + " --" + e.itype + "--> " + display(e.dst);
    if (n >= 2) line += " (x" + std::to_string(n) + ")";
    out.lines.push_back(std::move(line));
  };
  const auto& es = a.edges;
  for (std::size_t i = 0; i < es.size();) {
    std::size_t j = i;
    std::int64_t n = 0;
    while (j < es.size() && es[j].src == es[i].src && es[j].dst == es[i].dst && es[j].itype == es[i].itype)
      n += es[j++].count;
    emit(es[i], n);
    out.total_count += n;
    i = j;
  }
  for (const auto& [k, _] : a.nodes) display(k);
  return out;
}

TacticCatalog TacticCatalog::parse(std::string_view tsv) {
  TacticCatalog c;
  std::set<std::string> folded;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(tsv)) {
    ++line_no;
    if (text::trim(line).empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("tactic catalog: expected name<TAB>description", line_no);
    Tactic t{std::string(text::trim(line.substr(0, tab))), std::string(text::trim(line.substr(tab + 1)))};
    if (t.name.empty()) throw ParseError("tactic catalog: empty name", line_no);
    if (!folded.insert(text::casefold(t.name)).second)
      throw ParseError("tactic catalog: duplicate name " + t.name, line_no);
    c.tactics_.push_back(std::move(t));
  }
  if (c.tactics_.empty()) throw ParseError("tactic catalog is empty");
  return c;
}

TacticCatalog TacticCatalog::bundled() { return parse(assets::tactics_tsv); }

TacticCatalog TacticCatalog::load(const std::filesystem::path& path) { return parse(read_text(path)); }

const Tactic* TacticCatalog::find(std::string_view name) const {
  for (const auto& t : tactics_)
    if (text::iequals(t.name, text::trim(name))) return &t;
  return nullptr;
}

std::string TacticCatalog::names_text() const {
  std::vector<std::string> names;
  for (const auto& t : tactics_) names.push_back(t.name);
  return text::join(names, "\n");
}

std::set<std::string> flag_unknown_entities(llm::ChatProvider& provider, const std::vector<std::string>& names,
                                            std::vector<std::string>* warnings, std::size_t max_parallel) {
  std::vector<std::optional<bool>> known(names.size());
  std::vector<std::string> notes(names.size());
  parallel_for(names.size(), max_parallel, [&](std::size_t i) {
    try {
      auto reply = provider.complete(llm::ChatRequest::make(llm::PromptId::P7, {{"entity", names[i]}}));
      known[i] = llm::parse_yes_no(reply);
      if (!known[i]) notes[i] = "unclear familiarity answer for " + names[i] + ": " + std::string(text::trim(reply));
    } catch (const Error& e) {
      notes[i] = "familiarity check for " + names[i] + " failed: " + e.what();
    }
  });
  std::set<std::string> unknown;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!notes[i].empty() && warnings) warnings->push_back(notes[i]);
    if (!known[i] || !*known[i]) unknown.insert(names[i]);
  }
  return unknown;
}

std::vector<ContextEntry> inject_context(const std::set<std::string>& unknown, const detect::AttackGraph& a,
                                         const enrich::FunctionalityDB& fdb) {
  std::map<std::string, std::string> key_of;
  for (const auto& [k, n] : a.nodes) key_of.emplace(n.display_name(), k);
  std::vector<ContextEntry> out;
  for (const auto& name : unknown) {
    std::optional<std::string> label;
    if (auto it = key_of.find(name); it != key_of.end()) {
      if (auto e = fdb.get(it->second)) label = e->label;
      else if (const auto& n = a.nodes.at(it->second); n.functional_label) label = n.functional_label;
    } else if (auto e = fdb.get(name)) {
      label = e->label;
    }
    if (label) out.push_back({name, *label, false});
    else out.push_back({name, std::string(kUnknownFunctionality), true});
  }
  return out;
}

void to_json(nlohmann::json& j, const AttackSummary& s) {
  auto tactics = nlohmann::json::array();
  for (const auto& t : s.tactics) tactics.push_back({{"tactic", t.tactic}, {"reasoning", t.reasoning}});
  auto context = nlohmann::json::array();
  for (const auto& c : s.context_injected)
    context.push_back({{"entity", c.entity}, {"label", c.label}, {"missing", c.missing}});
  j = {{"summary", s.summary_text}, {"tactics", tactics}, {"context", context}, {"warnings", s.warnings}};
}

void from_json(const nlohmann::json& j, AttackSummary& s) {
  s.summary_text = j.at("summary").get<std::string>();
  s.tactics.clear();
  for (const auto& t : j.at("tactics")) s.tactics.push_back({t.at("tactic"), t.at("reasoning")});
  s.context_injected.clear();
  for (const auto& c : j.at("context")) s.context_injected.push_back({c.at("entity"), c.at("label"), c.at("missing")});
  s.warnings = j.at("warnings").get<std::vector<std::string>>();
}

namespace {

std::string_view undecorated(std::string_view line) {
  line = text::trim(line);
  while (!line.empty() && (line.front() == '*' || line.front() == '#')) line.remove_prefix(1);
  return text::trim(line);
}

std::optional<std::string_view> strip_label(std::string_view line, std::string_view label) {
  auto l = undecorated(line);
  if (l.size() < label.size() || !text::iequals(l.substr(0, label.size()), label)) return std::nullopt;
  auto rest = l.substr(label.size());
  while (!rest.empty() && rest.front() == '*') rest.remove_prefix(1);
  return text::trim(rest);
}

}  // namespace

std::optional<std::string> extract_summary(std::string_view response) {
  std::optional<std::string> out;
  for (const auto& line : text::split_lines(response)) {
    if (!out) {
      if (auto rest = strip_label(line, "Summary:")) out = std::string(*rest);
      continue;
    }
    if (strip_label(line, "Stage:")) break;
    auto t = text::trim(line);
    if (t.empty()) continue;
    if (!out->empty()) *out += ' ';
    *out += t;
  }
  if (out && out->empty()) return std::nullopt;
  return out;
}

AttackSummary summarize_attack(llm::ChatProvider& provider, const LinearizedGraph& linearized,
                               const std::vector<ContextEntry>& context,
                               const std::vector<std::string>& malicious, const TacticCatalog& catalog) {
  if (linearized.lines.empty() && linearized.entity_names.empty()) throw AssistantError("empty attack graph", "");
  std::vector<std::string> meta;
  for (const auto& c : context) meta.push_back("(" + c.entity + ", " + c.label + ")");
  auto reply = provider.complete(llm::ChatRequest::make(
      llm::PromptId::P8, {{"edges", linearized.text()},
                          {"malicious", text::join(malicious, "\n")},
                          {"metadata", meta.empty() ? "(none)" : text::join(meta, "\n")},
                          {"tactics", catalog.names_text()}}));
  auto summary = extract_summary(reply);
  if (!summary) throw AssistantError("attack summary response has no \"Summary:\" section", reply);
  AttackSummary out;
  out.summary_text = *summary;
  out.context_injected = context;
  std::set<std::string> seen;
  for (auto& s : llm::parse_stage_reasoning(reply)) {
    const auto* t = catalog.find(s.tactic);
    if (!t) {
      out.warnings.push_back("dropped off-catalog tactic: " + s.tactic);
      continue;
    }
    if (!seen.insert(t->name).second) continue;
    if (s.missing_reasoning) out.warnings.push_back("tactic without reasoning: " + t->name);
    out.tactics.push_back({t->name, s.reasoning});
  }
  return out;
}

bool judge_tactic(const Judges& judges, const std::string& tactic, const std::string& reasoning,
                  const TacticCatalog& catalog, std::vector<std::string>* warnings) {
  const auto* t = catalog.find(tactic);
  if (!t) throw Error("tactic not in catalog: " + tactic);
  std::array<int, 3> votes{};
  std::array<std::string, 3> notes;
  parallel_for(3, 3, [&](std::size_t i) {
    try {
      auto reply = judges[i]->complete(llm::ChatRequest::make(
          llm::PromptId::P9, {{"tactic", t->name}, {"reasoning", reasoning}, {"reference", t->description}}));
      auto yes = llm::parse_yes_no(reply);
      votes[i] = yes && *yes;
      if (!yes) notes[i] = "judge " + std::to_string(i + 1) + " gave no YES/NO for " + t->name;
    } catch (const Error& e) {
      notes[i] = "judge " + std::to_string(i + 1) + " failed on " + t->name + ": " + e.what();
    }
  });
  if (warnings)
    for (auto& n : notes)
      if (!n.empty()) warnings->push_back(n);
  return votes[0] + votes[1] + votes[2] >= 2;
}

std::optional<double> tactic_correctness(const AttackSummary& summary, const Judges& judges,
                                         const TacticCatalog& catalog, std::vector<std::string>* warnings) {
  if (summary.tactics.empty()) return std::nullopt;
  std::size_t pass = 0;
  for (const auto& t : summary.tactics) pass += judge_tactic(judges, t.tactic, t.reasoning, catalog, warnings);
  return static_cast<double>(pass) / static_cast<double>(summary.tactics.size());
}

ExplainResult explain(llm::ChatProvider& provider, const detect::AttackGraph& a,
                      const enrich::FunctionalityDB& fdb, const TacticCatalog& catalog) {
  if (a.empty()) throw AssistantError("empty attack graph", "");
  ExplainResult r;
  r.linearized = linearize(a);
  std::vector<std::string> warnings;
  r.unknown = flag_unknown_entities(provider, r.linearized.entity_names, &warnings);
  auto context = inject_context(r.unknown, a, fdb);
  std::vector<std::string> malicious;
  for (const auto& k : a.seed_keys) malicious.push_back(a.nodes.at(k).display_name());
  r.summary = summarize_attack(provider, r.linearized, context, malicious, catalog);
  for (const auto& c : context)
    if (c.missing) warnings.push_back("no functionality known for " + c.entity);
  r.summary.warnings.insert(r.summary.warnings.begin(), warnings.begin(), warnings.end());
  return r;
}

std::string render_report(const ExplainResult& r) {
  std::string out = "Attack graph\n";
  for (const auto& l : r.linearized.lines) out += "  " + l + "\n";
  if (!r.summary.context_injected.empty()) {
    out += "\nSupplementary context\n";
    for (const auto& c : r.summary.context_injected) out += "  " + c.entity + ": " + c.label + "\n";
  }
  out += "\nSummary\n  " + r.summary.summary_text + "\n";
  out += "\nTactics\n";
  if (r.summary.tactics.empty()) out += "  (none)\n";
  for (const auto& t : r.summary.tactics) out += "  " + t.tactic + ": " + t.reasoning + "\n";
  if (!r.summary.warnings.empty()) {
    out += "\nWarnings\n";
    for (const auto& w : r.summary.warnings) out += "  " + w + "\n";
  }
  return out;
}

}  // namespace autoprov::assistant
