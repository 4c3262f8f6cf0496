#include "autoprov/eval/poison.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "autoprov/enrich/normalize.hpp"
#include "autoprov/eval/metrics.hpp"

namespace autoprov::eval {

std::size_t poison_sample_size(double rate, std::size_t n) {
  auto k = static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) / 100.0));
  return std::max<std::size_t>(1, k);
}

std::string poison_name(std::string_view name, Rng& rng) {
  static constexpr std::string_view letters = "abcdefghijklmnopqrstuvwxyz";
  static constexpr std::string_view alnum = "abcdefghijklmnopqrstuvwxyz0123456789";
  auto last_sep = name.find_last_of("/\\");
  std::size_t final_start = last_sep == std::string_view::npos ? 0 : last_sep + 1;
  std::size_t stop = name.size();
  auto dot = name.rfind('.');
  if (dot != std::string_view::npos && dot > final_start) stop = dot;
  std::string out;
  bool run_start = true;
  for (std::size_t i = 0; i < name.size(); ++i) {
    char c = name[i];
    if (i < stop && std::isalnum(static_cast<unsigned char>(c))) {
      out += run_start ? letters[rng.below(letters.size())] : alnum[rng.below(alnum.size())];
      run_start = false;
    } else {
      out += c;
      run_start = true;
    }
  }
  return out;
}

std::vector<std::string> poisonable_names(const detect::AttackGraph& a) {
  std::vector<std::string> out;
  for (const auto& [k, n] : a.nodes) {
    if (k.rfind("anon:", 0) == 0 || enrich::is_endpoint(k)) continue;
    out.push_back(n.display_name());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

PoisonResult poison_names(const detect::AttackGraph& a, double rate, std::uint64_t seed) {
  if (!(rate >= 0 && rate <= 100)) throw Error("poisoning rate must be within [0, 100]");
  auto names = poisonable_names(a);
  if (names.empty()) throw Error("attack graph has no named entity to poison");
  PoisonResult r;
  r.plan.rate = rate;
  r.plan.seed = seed;
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(std::llround(rate * 1000))));
  auto picks = rng.sample(names.size(), poison_sample_size(rate, names.size()));
  std::set<std::string> chosen;
  for (auto i : picks) chosen.insert(names[i]);

  std::set<std::string> used_names(names.begin(), names.end());
  std::set<std::string> used_keys;
  for (const auto& [k, _] : a.nodes) used_keys.insert(k);
  for (const auto& name : chosen) {  // sorted, so the draw order is fixed
    for (int attempt = 0;; ++attempt) {
      if (attempt == 1000) throw Error("cannot find an unused poisoned name for " + name);
      auto p = poison_name(name, rng);
      auto key = enrich::normalize_entity_name(p);
      if (used_names.count(p) || used_keys.count(key)) continue;
      used_names.insert(p);
      used_keys.insert(key);
      r.plan.mapping[name] = p;
      break;
    }
  }
  for (const auto& [k, n] : a.nodes) {
    auto it = r.plan.mapping.find(n.display_name());
    if (it != r.plan.mapping.end() && !(k.rfind("anon:", 0) == 0 || enrich::is_endpoint(k)))
      r.plan.key_mapping[k] = enrich::normalize_entity_name(it->second);
  }

  auto rename = [&](const std::string& k) {
    auto it = r.plan.key_mapping.find(k);
    return it == r.plan.key_mapping.end() ? k : it->second;
  };
  for (const auto& [k, n] : a.nodes) {
    auto copy = n;
    copy.key = rename(k);
    if (copy.key != k) {
      copy.names = {r.plan.mapping.at(n.display_name())};
      copy.functional_label.reset();
    }
    r.graph.nodes.emplace(copy.key, std::move(copy));
  }
  for (auto e : a.edges) {
    e.src = rename(e.src);
    e.dst = rename(e.dst);
    r.graph.edges.push_back(std::move(e));
  }
  for (const auto& s : a.seed_keys) r.graph.seed_keys.push_back(rename(s));
  for (const auto& [k, v] : a.scores) r.graph.scores[rename(k)] = v;
  return r;
}

graph::ProvenanceGraph rename_nodes(const graph::ProvenanceGraph& g, const PoisonPlan& plan) {
  auto rename = [&](const std::string& k) {
    auto it = plan.key_mapping.find(k);
    return it == plan.key_mapping.end() ? k : it->second;
  };
  graph::ProvenanceGraph out(g.options());
  for (const auto& [k, n] : g.nodes()) {
    auto& m = out.upsert_node(rename(k), n.first_seen_seq);
    if (m.key == k) {
      m = n;
    } else {
      m.names = {plan.mapping.at(n.display_name())};
      m.coarse_types = n.coarse_types;
    }
  }
  for (auto e : g.edges()) {
    e.src = rename(e.src);
    e.dst = rename(e.dst);
    out.add_edge(std::move(e));
  }
  return out;
}

double summary_similarity(const embed::EmbeddingProvider& embedder, std::string_view original,
                          std::string_view poisoned) {
  if (original.empty() || poisoned.empty()) throw Error("summary similarity needs two non-empty summaries");
  return std::clamp(embed::dot(embedder.embed(original), embedder.embed(poisoned)), -1.0, 1.0);
}

void to_json(nlohmann::json& j, const SweepRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  j = {{"rate", r.rate},           {"poisoned", r.poisoned},     {"relabeled", r.relabeled},
       {"alpha_tc", opt(r.alpha_tc)}, {"alpha_r", opt(r.alpha_r)}, {"similarity", opt(r.similarity)},
       {"error", r.error}};
}

namespace {

std::vector<std::string> tactic_names(const assistant::AttackSummary& s) {
  std::vector<std::string> out;
  for (const auto& t : s.tactics) out.push_back(t.tactic);
  return out;
}

}  // namespace

std::vector<SweepRow> robustness_sweep(const SweepContext& ctx, const std::vector<double>& rates,
                                       std::uint64_t seed) {
  std::vector<SweepRow> rows;
  if (rates.empty()) return rows;
  auto baseline = assistant::explain(*ctx.assistant, *ctx.attack, *ctx.fdb, *ctx.catalog);
  for (double rate : rates) {
    SweepRow row;
    row.rate = rate;
    try {
      auto poisoned = poison_names(*ctx.attack, rate, seed);
      row.poisoned = poisoned.plan.mapping.size();
      auto full = rename_nodes(*ctx.graph, poisoned.plan);

      // Poisoned keys miss the functionality database by construction; only
      // behavioral evidence can label them.
      enrich::LabelMap labels;
      for (const auto& [k, n] : full.nodes())
        if (n.functional_label) labels[k] = *n.functional_label;
      std::vector<std::string> pending;
      for (const auto& [_, k] : poisoned.plan.key_mapping) pending.push_back(k);
      std::sort(pending.begin(), pending.end());
      auto bdb = *ctx.bdb;
      // Each sweep labels at least one entity or stops, so pending.size() bounds a fixpoint run.
      int sweeps = ctx.max_sweeps > 0 ? ctx.max_sweeps : static_cast<int>(pending.size());
      auto swept = enrich::classify_pending(full, pending, labels, bdb, *ctx.index, sweeps);
      row.relabeled = swept.classified.size();

      auto fdb = *ctx.fdb;
      for (const auto& [k, c] : swept.classified) {
        fdb.put(k, c.label, enrich::LabelSource::Behavioral);
        if (auto it = poisoned.graph.nodes.find(k); it != poisoned.graph.nodes.end())
          it->second.functional_label = c.label;
      }
      auto result = assistant::explain(*ctx.assistant, poisoned.graph, fdb, *ctx.catalog);
      if (ctx.judges) {
        std::vector<std::string> warnings;
        row.alpha_tc = assistant::tactic_correctness(result.summary, *ctx.judges, *ctx.catalog, &warnings);
      }
      auto mo = tactic_names(baseline.summary);
      if (!mo.empty()) row.alpha_r = tactic_consistency(mo, tactic_names(result.summary));
      row.similarity = summary_similarity(*ctx.embedder, baseline.summary.summary_text, result.summary.summary_text);
    } catch (const Error& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace autoprov::eval
