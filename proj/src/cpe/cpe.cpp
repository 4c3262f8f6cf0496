#include "autoprov/cpe/cpe.hpp"

#include <algorithm>

#include "autoprov/core/parallel.hpp"
#include "autoprov/core/rng.hpp"
#include "autoprov/core/text.hpp"
#include "autoprov/core/timestamp.hpp"

namespace autoprov::cpe {

using llm::ChatRequest;
using llm::PromptId;

void to_json(nlohmann::json& j, const CpeOutput& o) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : o.edges) {
    edges.push_back({{"sid", e.sid}, {"did", e.did}, {"itype", e.itype},
                     {"time_raw", e.time_raw ? nlohmann::json(*e.time_raw) : nlohmann::json()}});
  }
  j = {{"log_id", o.log_id}, {"summary", o.summary}, {"entity_types", o.entity_types},
       {"entity_names", o.entity_names}, {"pairs", o.pairs}, {"edges", edges}};
}

void to_json(nlohmann::json& j, const SkipEntry& s) {
  j = {{"log_id", s.log_id}, {"stage", s.stage}, {"cause", s.cause}};
}

void from_json(const nlohmann::json& j, SkipEntry& s) {
  s.log_id = j.at("log_id").get<std::string>();
  s.stage = j.at("stage").get<std::string>();
  s.cause = j.at("cause").get<std::string>();
}

void InContextPool::add(PromptId id, llm::InContextExample example) {
  std::lock_guard lock(mu_);
  auto& slot = slots_[id];
  const auto n = ++slot.seen;
  if (slot.items.size() < capacity_) {
    slot.items.push_back(std::move(example));
    return;
  }
  auto j = mix_seed(mix_seed(seed_, static_cast<std::uint64_t>(id)), n) % n;
  if (j < capacity_) slot.items[j] = std::move(example);
}

std::vector<llm::InContextExample> InContextPool::sample(PromptId id) {
  std::lock_guard lock(mu_);
  auto& slot = slots_[id];
  Rng rng(mix_seed(mix_seed(seed_ ^ 0x5eed, static_cast<std::uint64_t>(id)), slot.draws++));
  std::vector<llm::InContextExample> out;
  for (auto i : rng.sample(slot.items.size(), sample_size_)) out.push_back(slot.items[i]);
  return out;
}

std::size_t InContextPool::size(PromptId id) const {
  std::lock_guard lock(mu_);
  auto it = slots_.find(id);
  return it == slots_.end() ? 0 : it->second.items.size();
}

namespace {

ChatRequest request(PromptId id, std::map<std::string, std::string> bindings,
                    const CpeConfig& config, std::vector<llm::InContextExample> examples) {
  if (!config.platform.empty()) bindings["platform"] = config.platform;
  auto r = ChatRequest::make(id, std::move(bindings));
  r.in_context_examples = std::move(examples);
  return r;
}

bool is_none(const std::string& v) { return v.empty() || text::iequals(v, llm::kNone); }

const std::string* lookup(const KeyValues& kv, const std::string& id) {
  for (const auto& [k, v] : kv)
    if (k == id) return &v;
  return nullptr;
}

std::string render_pairs(const std::vector<IdPair>& pairs) {
  std::string out;
  for (const auto& [a, b] : pairs) out += "(" + a + ", " + b + ")\n";
  if (!out.empty()) out.pop_back();
  return out;
}

std::string render_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv)
    out += "\"" + k + "\" = " + (is_none(v) ? std::string(llm::kNone) : "\"" + v + "\"") + "\n";
  return out;
}

std::string render_sections(const CpeOutput& o) {
  std::string out = "[RELATED ENTITIES and IP ADDRESSES]\n";
  if (o.pairs.empty()) out += std::string(llm::kNoPairsSentinel) + "\n";
  for (const auto& [a, b] : o.pairs) out += "(" + a + ", " + b + ")\n";
  return out + "\n[ENTITY NAMES]\n" + render_key_values(o.entity_names);
}

std::string render_edges(const std::vector<CpeEdge>& edges) {
  std::string out;
  for (const auto& e : edges)
    out += "(" + e.sid + ", " + e.did + ")  A: [" + e.itype + "] {D=->} (timestamp=" +
           e.time_raw.value_or("...") + ")\n";
  return out;
}

}  // namespace

std::string summarize_log(llm::ChatProvider& provider, const std::string& log,
                          const CpeConfig& config, std::vector<llm::InContextExample> examples) {
  if (text::trim(log).empty()) throw ExtractionError("summarize", "empty log");
  auto out = provider.complete(request(PromptId::P1, {{"log", log}}, config, std::move(examples)));
  if (text::trim(out).empty()) throw ExtractionError("summarize", "empty response");
  return std::string(text::trim(out));
}

TypesResult extract_entity_types(llm::ChatProvider& provider, const std::string& log,
                                 const std::string& summary, const CpeConfig& config,
                                 std::vector<llm::InContextExample> examples) {
  auto out = provider.complete(
      request(PromptId::P2, {{"log", log}, {"summary", summary}}, config, std::move(examples)));
  auto kv = llm::parse_key_value_lines(out);
  if (kv.entries.empty()) throw ExtractionError("entity_types", "no parsable type line");
  return {std::move(kv.entries), std::move(kv.conflicts)};
}

EntitiesResult extract_entities(llm::ChatProvider& provider, const std::string& log,
                                const std::string& summary, const CpeConfig& config,
                                std::vector<llm::InContextExample> examples) {
  auto out = provider.complete(
      request(PromptId::P3, {{"log", log}, {"summary", summary}}, config, std::move(examples)));
  try {
    auto s = llm::parse_entity_sections(out);
    return {std::move(s.pairs), std::move(s.names.entries), std::move(s.names.conflicts)};
  } catch (const ParseError& e) {
    throw ExtractionError("entities", e.what());
  }
}

VoteResult vote_edges(const std::vector<IdPair>& pairs,
                      const std::vector<std::vector<llm::EdgeLine>>& runs) {
  VoteResult out;
  out.valid_runs = static_cast<int>(runs.size());
  for (const auto& pair : pairs) {
    // Per run: the first line naming the pair fixes that run's direction.
    struct RunView {
      bool lr;
      std::vector<const llm::EdgeLine*> lines;
    };
    std::vector<RunView> views;
    for (const auto& run : runs) {
      std::optional<RunView> view;
      for (const auto& line : run) {
        bool same = line.left_id == pair.first && line.right_id == pair.second;
        bool swapped = line.left_id == pair.second && line.right_id == pair.first;
        if (!same && !swapped) continue;
        bool lr = (line.direction == llm::Direction::LR) == same;
        if (!view) view = RunView{lr, {}};
        if (view->lr == lr) view->lines.push_back(&line);
      }
      if (view) views.push_back(std::move(*view));
    }
    if (views.empty()) {
      out.warnings.push_back("pair (" + pair.first + ", " + pair.second + ") absent from every run; dropped");
      continue;
    }
    auto lr_votes = std::count_if(views.begin(), views.end(), [](const RunView& v) { return v.lr; });
    auto rl_votes = static_cast<std::ptrdiff_t>(views.size()) - lr_votes;
    bool lr = lr_votes >= rl_votes;
    if (lr_votes == rl_votes)
      out.warnings.push_back("direction tie for (" + pair.first + ", " + pair.second +
                             "); resolved left-to-right");
    const auto& src = lr ? pair.first : pair.second;
    const auto& dst = lr ? pair.second : pair.first;
    std::vector<CpeEdge> edges;
    for (const auto& v : views) {
      if (v.lr != lr) continue;
      for (const auto* line : v.lines)
        for (const auto& action : line->actions) {
          bool known = std::any_of(edges.begin(), edges.end(),
                                   [&](const CpeEdge& e) { return e.itype == action; });
          if (!known) edges.push_back({src, dst, action, line->timestamp_raw});
        }
    }
    out.edges.insert(out.edges.end(), edges.begin(), edges.end());
  }
  return out;
}

VoteResult extract_edges_voted(llm::ChatProvider& provider, const std::string& log,
                               const std::string& summary, const std::vector<IdPair>& pairs,
                               const CpeConfig& config,
                               std::vector<llm::InContextExample> examples) {
  if (pairs.empty()) throw ExtractionError("edges", "no pairs to orient");
  if (config.n_votes < 1 || config.n_votes % 2 == 0)
    throw Error("n_votes must be odd and >= 1");
  const auto n = static_cast<std::size_t>(config.n_votes);
  std::vector<std::optional<std::vector<llm::EdgeLine>>> parsed(n);
  std::vector<std::string> failures(n);
  parallel_for(n, config.max_parallel, [&](std::size_t i) {
    auto r = request(PromptId::P4, {{"log", log}, {"summary", summary}, {"pairs", render_pairs(pairs)}},
                     config, examples);
    r.sample_index = static_cast<int>(i);
    try {
      parsed[i] = llm::parse_edge_lines(provider.complete(r)).edges;
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });
  std::vector<std::vector<llm::EdgeLine>> runs;
  std::vector<std::string> notes;
  for (std::size_t i = 0; i < n; ++i) {
    if (parsed[i])
      runs.push_back(std::move(*parsed[i]));
    else
      notes.push_back("vote " + std::to_string(i) + " failed: " + failures[i]);
  }
  if (runs.empty()) throw ExtractionError("edges", "all " + std::to_string(n) + " runs failed");
  auto out = vote_edges(pairs, runs);
  out.warnings.insert(out.warnings.begin(), notes.begin(), notes.end());
  return out;
}

std::vector<ProvenanceRecord> assemble_records(const CpeOutput& o, std::vector<std::string>* warnings) {
  std::vector<ProvenanceRecord> out;
  auto field = [](const KeyValues& kv, const std::string& id) -> std::optional<std::string> {
    auto v = lookup(kv, id);
    if (!v || is_none(*v)) return std::nullopt;
    return *v;
  };
  for (const auto& e : o.edges) {
    for (const auto* id : {&e.sid, &e.did}) {
      if (warnings && !lookup(o.entity_types, *id) && !lookup(o.entity_names, *id) &&
          !text::is_ip_port(*id))
        warnings->push_back(o.log_id + ": id '" + *id + "' has neither type nor name");
    }
    ProvenanceRecord r;
    r.sid = e.sid;
    r.stype = field(o.entity_types, e.sid);
    r.sname = field(o.entity_names, e.sid);
    r.did = e.did;
    r.dtype = field(o.entity_types, e.did);
    r.dname = field(o.entity_names, e.did);
    r.itype = e.itype;
    if (e.time_raw) r.time = parse_timestamp(*e.time_raw);
    r.origin = Origin::cpe();
    r.source_log_id = o.log_id;
    out.push_back(std::move(r));
  }
  return out;
}

CpeResult run_cpe(llm::ChatProvider& provider, const std::vector<cluster::CandidateEntry>& candidates,
                  InContextPool& pool, const CpeConfig& config) {
  CpeResult result;
  struct Slot {
    std::optional<CpeOutput> output;
    std::vector<ProvenanceRecord> records;
    std::optional<SkipEntry> skip;
    std::vector<std::pair<PromptId, llm::InContextExample>> examples;
  };
  const std::size_t batch = std::max<std::size_t>(1, config.max_parallel);
  for (std::size_t base = 0; base < candidates.size(); base += batch) {
    const std::size_t end = std::min(candidates.size(), base + batch);
    std::vector<Slot> slots(end - base);
    // Examples are drawn before the batch runs so draws follow candidate order.
    std::vector<std::array<std::vector<llm::InContextExample>, 4>> shots(end - base);
    for (std::size_t i = base; i < end; ++i)
      for (int p = 0; p < 4; ++p) shots[i - base][p] = pool.sample(static_cast<PromptId>(p + 1));

    parallel_for(end - base, config.max_parallel, [&](std::size_t k) {
      const auto& c = candidates[base + k];
      auto& slot = slots[k];
      std::string stage = "summarize";
      try {
        CpeOutput o;
        o.log_id = c.log_id;
        CpeConfig inner = config;
        inner.max_parallel = 1;
        o.summary = summarize_log(provider, c.raw_text, inner, shots[k][0]);
        stage = "entity_types";
        auto types = extract_entity_types(provider, c.raw_text, o.summary, inner, shots[k][1]);
        o.entity_types = std::move(types.types);
        stage = "entities";
        auto ents = extract_entities(provider, c.raw_text, o.summary, inner, shots[k][2]);
        o.pairs = std::move(ents.pairs);
        o.entity_names = std::move(ents.names);
        if (!o.pairs.empty()) {
          stage = "edges";
          o.edges = extract_edges_voted(provider, c.raw_text, o.summary, o.pairs, inner, shots[k][3]).edges;
        }
        slot.records = assemble_records(o);
        slot.examples = {{PromptId::P1, {c.raw_text, o.summary}},
                         {PromptId::P2, {c.raw_text, render_key_values(o.entity_types)}},
                         {PromptId::P3, {c.raw_text, render_sections(o)}}};
        if (!o.edges.empty()) slot.examples.push_back({PromptId::P4, {c.raw_text, render_edges(o.edges)}});
        slot.output = std::move(o);
      } catch (const ExtractionError& e) {
        slot.skip = SkipEntry{c.log_id, e.stage(), e.what()};
      } catch (const Error& e) {
        slot.skip = SkipEntry{c.log_id, stage, e.what()};
      }
    });
    for (auto& slot : slots) {
      if (slot.skip) {
        result.skips.push_back(std::move(*slot.skip));
        continue;
      }
      for (auto& [id, ex] : slot.examples) pool.add(id, std::move(ex));
      auto& recs = result.db[slot.output->log_id];
      recs.insert(recs.end(), slot.records.begin(), slot.records.end());
      result.outputs.push_back(std::move(*slot.output));
    }
  }
  return result;
}

std::vector<ProvenanceRecord> flatten(const std::map<std::string, std::vector<ProvenanceRecord>>& db) {
  std::vector<ProvenanceRecord> out;
  for (const auto& [_, recs] : db) out.insert(out.end(), recs.begin(), recs.end());
  return out;
}

}  // namespace autoprov::cpe
