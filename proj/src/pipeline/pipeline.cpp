#include "autoprov/pipeline/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <set>

#include "autoprov/assistant/assistant.hpp"
#include "autoprov/cluster/cluster.hpp"
#include "autoprov/core/hash.hpp"
#include "autoprov/core/jsonl.hpp"
#include "autoprov/core/records.hpp"
#include "autoprov/core/rng.hpp"
#include "autoprov/core/text.hpp"
#include "autoprov/cpe/cpe.hpp"
#include "autoprov/detect/detect.hpp"
#include "autoprov/embed/embedding.hpp"
#include "autoprov/enrich/enrich.hpp"
#include "autoprov/eval/metrics.hpp"
#include "autoprov/eval/poison.hpp"
#include "autoprov/graph/graph.hpp"
#include "autoprov/llm/scripted.hpp"
#include "autoprov/rules/rules.hpp"

namespace autoprov::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::Cluster: return "cluster";
    case Stage::Extract: return "extract";
    case Stage::Rules: return "rules";
    case Stage::Build: return "build";
    case Stage::Enrich: return "enrich";
    case Stage::Detect: return "detect";
    case Stage::Explain: return "explain";
    case Stage::Eval: return "eval";
  }
  return "?";
}

std::optional<Stage> stage_from_name(std::string_view name) {
  for (auto s : kAllStages)
    if (stage_name(s) == name) return s;
  return std::nullopt;
}

namespace {

// Artifacts are named "db:<file>" or "out:<file>"; external inputs "cfg:<key>".
struct Artifact {
  std::string name;
  std::string what;  // used in "missing ..." messages
};

struct StageSpec {
  std::vector<Artifact> inputs;
  std::vector<std::string> outputs;
  std::vector<std::string> config_prefixes;
};

const std::map<std::string, std::string>& descriptions() {
  static const std::map<std::string, std::string> d = {
      {"db:candidates.jsonl", "candidate log set"},
      {"db:pdb.jsonl", "candidate provenance database"},
      {"db:rules.jsonl", "rule database"},
      {"db:functionality.jsonl", "functionality database"},
      {"db:behavioral.jsonl", "behavioral database"},
      {"db:signatures.jsonl", "signature registry"},
      {"out:assignments.jsonl", "cluster assignments"},
      {"out:records_train.jsonl", "training provenance records"},
      {"out:records_test.jsonl", "test provenance records"},
      {"out:rule_stats.json", "rule statistics"},
      {"out:graph_train_nodes.jsonl", "training graph"},
      {"out:graph_train_edges.jsonl", "training graph"},
      {"out:graph_test_nodes.jsonl", "test graph"},
      {"out:graph_test_edges.jsonl", "test graph"},
      {"out:enriched_train_nodes.jsonl", "enriched training graph"},
      {"out:enriched_train_edges.jsonl", "enriched training graph"},
      {"out:enriched_test_nodes.jsonl", "enriched test graph"},
      {"out:enriched_test_edges.jsonl", "enriched test graph"},
      {"out:scores.csv", "anomaly scores"},
      {"out:attack_graph.jsonl", "attack graph"},
      {"out:summary.json", "attack summary"},
  };
  return d;
}

Artifact art(const std::string& name) {
  auto it = descriptions().find(name);
  return {name, it == descriptions().end() ? name : it->second};
}

const std::vector<std::string> kOptionalInputKeys = {"chat.stub_script",  "enrich.manual_labels",
                                                     "enrich.functionality_db", "assistant.tactics",
                                                     "judge.stub_script", "eval.attack_truth",
                                                     "eval.line_truth"};

StageSpec spec_of(Stage s) {
  switch (s) {
    case Stage::Cluster:
      return {{art("cfg:input.train"), art("cfg:input.test")},
              {"db:clusters.jsonl", "db:candidates.jsonl", "out:assignments.jsonl"},
              {"seed", "cluster.", "embed."}};
    case Stage::Extract:
      return {{art("db:candidates.jsonl"), art("cfg:chat.stub_script")},
              {"db:pdb.jsonl", "out:cpe_outputs.jsonl", "out:cpe_skips.jsonl"},
              {"seed", "cpe.", "chat."}};
    case Stage::Rules:
      return {{art("db:candidates.jsonl"), art("db:pdb.jsonl"), art("out:assignments.jsonl"),
               art("cfg:input.train"), art("cfg:input.test"), art("cfg:chat.stub_script")},
              {"db:rules.jsonl", "out:rule_report.jsonl", "out:records_train.jsonl", "out:records_test.jsonl",
               "out:rule_stats.json"},
              {"rules.", "chat.", "cpe.platform"}};
    case Stage::Build:
      return {{art("out:records_train.jsonl"), art("out:records_test.jsonl")},
              {"out:graph_train_nodes.jsonl", "out:graph_train_edges.jsonl", "out:graph_test_nodes.jsonl",
               "out:graph_test_edges.jsonl"},
              {"graph."}};
    case Stage::Enrich:
      return {{art("out:graph_train_nodes.jsonl"), art("out:graph_train_edges.jsonl"),
               art("out:graph_test_nodes.jsonl"), art("out:graph_test_edges.jsonl"), art("cfg:chat.stub_script"),
               art("cfg:enrich.manual_labels"), art("cfg:enrich.functionality_db")},
              {"db:functionality.jsonl", "db:behavioral.jsonl", "db:signatures.jsonl",
               "out:enriched_train_nodes.jsonl", "out:enriched_train_edges.jsonl", "out:enriched_test_nodes.jsonl",
               "out:enriched_test_edges.jsonl", "out:label_features.jsonl", "out:enrich_stats.json"},
              {"enrich.", "chat.", "embed."}};
    case Stage::Detect:
      return {{art("out:enriched_train_nodes.jsonl"), art("out:enriched_train_edges.jsonl"),
               art("out:enriched_test_nodes.jsonl"), art("out:enriched_test_edges.jsonl")},
              {"out:scores.csv", "out:attack_graph.jsonl", "out:detect_stats.json"},
              {"detect."}};
    case Stage::Explain:
      return {{art("out:attack_graph.jsonl"), art("db:functionality.jsonl"), art("cfg:chat.stub_script"),
               art("cfg:assistant.tactics")},
              {"out:summary.json", "out:report.md"},
              {"chat.", "assistant."}};
    case Stage::Eval:
      return {{art("out:scores.csv"), art("out:attack_graph.jsonl"), art("out:summary.json"),
               art("out:enriched_test_nodes.jsonl"), art("out:enriched_test_edges.jsonl"),
               art("db:functionality.jsonl"), art("db:behavioral.jsonl"), art("db:signatures.jsonl"),
               art("out:assignments.jsonl"), art("out:rule_stats.json"), art("cfg:chat.stub_script"),
               art("cfg:judge.stub_script"), art("cfg:assistant.tactics"), art("cfg:eval.attack_truth"),
               art("cfg:eval.line_truth")},
              {"out:metrics.json", "out:metrics.csv", "out:sweep.jsonl", "out:sweep.csv"},
              {"seed", "eval.", "judge.", "chat.", "embed.", "assistant."}};
  }
  return {};
}

bool optional_input(const std::string& name) {
  if (name.rfind("cfg:", 0) != 0) return false;
  auto key = name.substr(4);
  return std::find(kOptionalInputKeys.begin(), kOptionalInputKeys.end(), key) != kOptionalInputKeys.end();
}

void write_json(const fs::path& p, const json& j) { write_text_atomic(p, j.dump(2) + "\n"); }

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt_cell(const std::optional<double>& v) { return v ? fmt_double(*v) : ""; }

std::vector<double> parse_rates(const RunConfig& c) {
  std::vector<double> out;
  auto v = c.get_or("eval.rates", "");
  if (text::trim(v).empty()) return out;
  for (const auto& r : text::split(v, ',')) out.push_back(std::stod(std::string(text::trim(r))));
  return out;
}

class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      throw StageError("lock", "database directory in use by another run (remove " + path_.string() +
                                   " if no run is active)");
    auto pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd_, pid.data(), pid.size());
  }
  ~DirLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }

 private:
  fs::path path_;
  int fd_ = -1;
};

}  // namespace

struct Pipeline::Impl {
  RunConfig cfg;
  fs::path db;
  fs::path out;
  std::unique_ptr<DirLock> lock;
  json manifest;
  std::unique_ptr<llm::ChatProvider> chat_;
  std::unique_ptr<embed::EmbeddingProvider> embedder_;

  fs::path resolve(const std::string& name) const {
    if (name.rfind("db:", 0) == 0) return db / name.substr(3);
    if (name.rfind("out:", 0) == 0) return out / name.substr(4);
    if (name.rfind("cfg:", 0) == 0) {
      auto p = cfg.path(name.substr(4));
      return p ? *p : fs::path();
    }
    throw Error("bad artifact name " + name);
  }

  fs::path p(const std::string& name) const { return resolve(name); }

  std::uint64_t seed() const { return static_cast<std::uint64_t>(cfg.get_int("seed", 0)); }

  llm::ChatProvider& chat() {
    if (!chat_) {
      if (auto script = cfg.path("chat.stub_script")) {
        chat_ = std::make_unique<llm::ScriptedResponder>(llm::ScriptedResponder::from_file(*script));
      } else {
        llm::ChatProviderConfig c;
        c.endpoint_url = cfg.get_or("chat.endpoint", "");
        c.model_name = cfg.get_or("chat.model", "");
        c.api_key_env = cfg.get_or("chat.api_key_env", "");
        c.timeout_ms = static_cast<int>(cfg.get_int("chat.timeout_ms", c.timeout_ms));
        c.retry_limit = static_cast<int>(cfg.get_int("chat.retry_limit", c.retry_limit));
        c.max_in_flight = static_cast<int>(cfg.get_int("chat.max_in_flight", c.max_in_flight));
        chat_ = llm::make_http_chat_provider(c);
      }
    }
    return *chat_;
  }

  const embed::EmbeddingProvider& embedder() {
    if (!embedder_) {
      auto dim = static_cast<std::size_t>(cfg.get_int("embed.dimension", 0));
      if (cfg.get_or("embed.kind", "hashing") == "hashing") {
        embedder_ = std::make_unique<embed::HashingEmbedder>(dim ? dim : 256);
      } else {
        embed::HttpEmbeddingConfig c;
        c.endpoint_url = cfg.get_or("embed.endpoint", "");
        c.model_name = cfg.get_or("embed.model", "");
        c.api_key_env = cfg.get_or("embed.api_key_env", "");
        c.dimension = dim;
        embedder_ = embed::make_http_embedding_provider(c);
      }
    }
    return *embedder_;
  }

  // Three judges: distinct live models, or three copies of a scripted judge.
  std::vector<std::unique_ptr<llm::ChatProvider>> make_judges() {
    std::vector<std::unique_ptr<llm::ChatProvider>> out;
    if (auto models = cfg.get("judge.models")) {
      for (const auto& m : text::split(*models, ',')) {
        llm::ChatProviderConfig c;
        c.endpoint_url = cfg.get_or("chat.endpoint", "");
        c.model_name = std::string(text::trim(m));
        c.api_key_env = cfg.get_or("chat.api_key_env", "");
        out.push_back(llm::make_http_chat_provider(c));
      }
      return out;
    }
    auto script = cfg.path("judge.stub_script");
    if (!script) script = cfg.path("chat.stub_script");
    if (script)
      for (int i = 0; i < 3; ++i)
        out.push_back(std::make_unique<llm::ScriptedResponder>(llm::ScriptedResponder::from_file(*script)));
    return out;
  }

  assistant::TacticCatalog catalog() const {
    auto path = cfg.path("assistant.tactics");
    return path ? assistant::TacticCatalog::load(*path) : assistant::TacticCatalog::bundled();
  }

  std::string config_digest(const StageSpec& spec) const {
    json j = json::object();
    for (const auto& [k, v] : cfg.values)
      for (const auto& prefix : spec.config_prefixes)
        if (k.rfind(prefix, 0) == 0) j[k] = v;
    return digest_text(j.dump());
  }

  std::optional<std::pair<std::string, std::string>> recorded_output(const std::string& name) const {
    if (!manifest.contains("stages")) return std::nullopt;
    for (const auto& [stage, entry] : manifest["stages"].items()) {
      const auto& outs = entry["outputs"];
      if (outs.contains(name)) return std::make_pair(stage, outs[name].get<std::string>());
    }
    return std::nullopt;
  }

  void save_manifest() {
    manifest["tool_version"] = kToolVersion;
    manifest["config"] = cfg.values;
    json providers = json::object();
    if (chat_) providers["chat"] = chat_->identity();
    if (embedder_) {
      providers["embedding"] = embedder_->identity();
      providers["embedding_dimension"] = embedder_->dimension();
    }
    if (!providers.empty()) manifest["providers"].update(providers);
    write_json(out / "manifest.json", manifest);
  }

  json run_cluster();
  json run_extract();
  json run_rules();
  json run_build();
  json run_enrich();
  json run_detect();
  json run_explain();
  json run_eval();

  std::vector<LogRecord> stream() const {
    auto logs = read_log_file(*cfg.path("input.train"), "train");
    auto test = read_log_file(*cfg.path("input.test"), "test");
    logs.insert(logs.end(), test.begin(), test.end());
    auto window = cfg.get_int("cluster.window_size", 1000);
    for (std::size_t i = 0; i < logs.size(); ++i) {
      logs[i].arrival_seq = static_cast<std::int64_t>(i);
      logs[i].window_id = static_cast<std::int64_t>(i) / window;
    }
    return logs;
  }
};

json Pipeline::Impl::run_cluster() {
  auto logs = stream();
  cluster::ClusterParams params;
  params.radius = cfg.get_double("cluster.radius", params.radius);
  params.decay = cfg.get_double("cluster.decay", params.decay);
  params.w_min = cfg.get_double("cluster.w_min", params.w_min);
  params.reservoir_cap = static_cast<std::size_t>(cfg.get_int("cluster.reservoir", 64));
  params.seed = seed();
  auto k = static_cast<std::size_t>(cfg.get_int("cluster.k", 32));
  auto m = static_cast<std::size_t>(cfg.get_int("cluster.m", 3));
  cluster::Clusterer state(params);
  std::vector<json> candidates, assignments;
  std::size_t windows = 0;
  for (std::size_t begin = 0; begin < logs.size();) {
    auto w = logs[begin].window_id;
    std::size_t end = begin;
    while (end < logs.size() && logs[end].window_id == w) ++end;
    std::vector<LogRecord> win(logs.begin() + static_cast<std::ptrdiff_t>(begin),
                               logs.begin() + static_cast<std::ptrdiff_t>(end));
    auto r = cluster::process_window(state, win, embedder(), k, m, mix_seed(seed(), static_cast<std::uint64_t>(w)));
    for (const auto& c : r.candidates.entries) {
      json j = c;
      j["window_id"] = w;
      candidates.push_back(j);
    }
    for (const auto& l : win)
      assignments.push_back({{"log_id", l.log_id}, {"cluster_id", r.assignments.at(l.log_id)}, {"window_id", w}});
    ++windows;
    begin = end;
  }
  state.save(p("db:clusters.jsonl"));
  write_jsonl(p("db:candidates.jsonl"), candidates);
  write_jsonl(p("out:assignments.jsonl"), assignments);
  return {{"logs", logs.size()},
          {"windows", windows},
          {"clusters", state.clusters().size()},
          {"candidates", candidates.size()}};
}

json Pipeline::Impl::run_extract() {
  auto rows = read_jsonl_values(p("db:candidates.jsonl"));
  std::map<std::int64_t, std::vector<cluster::CandidateEntry>> by_window;
  for (const auto& r : rows) by_window[r.at("window_id").get<std::int64_t>()].push_back(r.get<cluster::CandidateEntry>());
  cpe::CpeConfig config;
  config.platform = cfg.get_or("cpe.platform", "");
  config.n_votes = static_cast<int>(cfg.get_int("cpe.n_votes", 7));
  config.max_parallel = static_cast<std::size_t>(cfg.get_int("cpe.max_parallel", 4));
  config.seed = seed();
  cpe::InContextPool pool(static_cast<std::size_t>(cfg.get_int("cpe.pool_capacity", 8)),
                          static_cast<std::size_t>(cfg.get_int("cpe.pool_sample", 2)), seed());
  std::map<std::string, std::vector<ProvenanceRecord>> db;
  std::vector<cpe::CpeOutput> outputs;
  std::vector<cpe::SkipEntry> skips;
  for (const auto& [w, entries] : by_window) {
    auto r = cpe::run_cpe(chat(), entries, pool, config);
    for (auto& [id, recs] : r.db) db[id] = std::move(recs);
    outputs.insert(outputs.end(), r.outputs.begin(), r.outputs.end());
    skips.insert(skips.end(), r.skips.begin(), r.skips.end());
  }
  auto records = cpe::flatten(db);
  write_jsonl(p("db:pdb.jsonl"), records);
  write_jsonl(p("out:cpe_outputs.jsonl"), outputs);
  write_jsonl(p("out:cpe_skips.jsonl"), skips);
  return {{"candidates", rows.size()}, {"extracted_logs", db.size()}, {"records", records.size()},
          {"skipped", skips.size()}};
}

json Pipeline::Impl::run_rules() {
  auto candidates = read_jsonl_values(p("db:candidates.jsonl"));
  std::map<std::string, std::vector<ProvenanceRecord>> pdb;
  for (auto& r : read_jsonl<ProvenanceRecord>(p("db:pdb.jsonl"))) pdb[r.source_log_id].push_back(std::move(r));
  std::map<std::string, std::int64_t> cluster_of;
  for (const auto& a : read_jsonl_values(p("out:assignments.jsonl")))
    cluster_of[a.at("log_id").get<std::string>()] = a.at("cluster_id").get<std::int64_t>();

  auto max_repair = static_cast<int>(cfg.get_int("rules.max_repair", 1));
  auto platform = cfg.get_or("cpe.platform", "");
  rules::RuleDB db;
  std::vector<json> report;
  std::size_t attempted = 0, accepted = 0, added = 0, reproduced = 0;
  for (const auto& c : candidates) {
    auto entry = c.get<cluster::CandidateEntry>();
    auto it = pdb.find(entry.log_id);
    if (it == pdb.end()) continue;
    for (const auto& rec : it->second) {
      ++attempted;
      auto outcome = rules::build_ruleset(chat(), entry.raw_text, rec, entry.cluster_id, max_repair, platform);
      json row = {{"log_id", entry.log_id}, {"cluster_id", entry.cluster_id}, {"accepted", outcome.rule.has_value()}};
      if (outcome.rule) {
        ++accepted;
        auto again = rules::apply_ruleset(*outcome.rule, entry.raw_text, entry.log_id);
        bool same = again && same_fields(*again, rec);
        if (same) ++reproduced;
        row["rule_id"] = outcome.rule->rule_id;
        row["reproduces_source"] = same;
        bool fresh = db.insert(*outcome.rule);
        if (fresh) ++added;
        row["new"] = fresh;
      }
      json failures = json::object();
      for (const auto& [field, cause] : outcome.report) failures[rules::field_name(field)] = cause;
      row["failures"] = failures;
      report.push_back(row);
    }
  }
  db.save(p("db:rules.jsonl"));
  write_jsonl(p("out:rule_report.jsonl"), report);

  std::vector<ProvenanceRecord> train, test;
  std::size_t logs = 0, rule_matched = 0, cpe_fallback = 0, unmatched = 0;
  for (const auto& l : stream()) {
    ++logs;
    auto cid = cluster_of.count(l.log_id) ? cluster_of[l.log_id] : -1;
    auto recs = db.apply(l.raw_text, l.log_id, cid);
    if (!recs.empty()) {
      ++rule_matched;
    } else if (auto it = pdb.find(l.log_id); it != pdb.end()) {
      recs = it->second;
      ++cpe_fallback;
    } else {
      ++unmatched;
      continue;
    }
    auto& dst = l.source_tag == "train" ? train : test;
    dst.insert(dst.end(), recs.begin(), recs.end());
  }
  write_jsonl(p("out:records_train.jsonl"), train);
  write_jsonl(p("out:records_test.jsonl"), test);
  json stats = {{"rule_sets_attempted", attempted},
                {"rule_sets_accepted", accepted},
                {"rule_sets_added", added},
                {"rule_sets_reproducing_source", reproduced},
                {"logs", logs},
                {"rule_matched", rule_matched},
                {"cpe_fallback", cpe_fallback},
                {"unmatched", unmatched},
                {"unmatched_rate", logs ? static_cast<double>(unmatched) / static_cast<double>(logs) : 0.0}};
  write_json(p("out:rule_stats.json"), stats);
  return stats;
}

json Pipeline::Impl::run_build() {
  graph::GraphOptions options;
  options.bucket_micros = cfg.get_int("graph.bucket_micros", options.bucket_micros);
  json stats;
  for (std::string part : {"train", "test"}) {
    auto g = graph::build_graph(read_jsonl<ProvenanceRecord>(p("out:records_" + part + ".jsonl")), options);
    g.save(p("out:graph_" + part + "_nodes.jsonl"), p("out:graph_" + part + "_edges.jsonl"));
    stats[part] = {{"nodes", g.nodes().size()}, {"edges", g.edges().size()}};
  }
  return stats;
}

json Pipeline::Impl::run_enrich() {
  enrich::FunctionalityDB fdb;
  if (auto seed_db = cfg.path("enrich.functionality_db")) fdb = enrich::FunctionalityDB::load(*seed_db);
  if (auto manual = cfg.path("enrich.manual_labels")) fdb.load_manual(*manual);
  enrich::BehavioralDB bdb;
  enrich::SignatureIndex index;
  enrich::EnrichOptions options;
  options.max_sweeps = static_cast<int>(cfg.get_int("enrich.max_sweeps", options.max_sweeps));
  options.max_parallel = static_cast<std::size_t>(cfg.get_int("enrich.max_parallel", 4));
  std::map<std::string, embed::Embedding> features;
  json stats;
  for (std::string part : {"train", "test"}) {
    auto g = graph::ProvenanceGraph::load(p("out:graph_" + part + "_nodes.jsonl"),
                                          p("out:graph_" + part + "_edges.jsonl"));
    auto r = enrich::enrich_graph(g, chat(), embedder(), fdb, bdb, index, options);
    g.save(p("out:enriched_" + part + "_nodes.jsonl"), p("out:enriched_" + part + "_edges.jsonl"));
    features.insert(r.label_features.begin(), r.label_features.end());
    stats[part] = {{"nodes", g.nodes().size()},
                   {"labeled", r.labels.size()},
                   {"unlabeled", r.unlabeled.size()},
                   {"provider_calls", r.provider_calls},
                   {"behavioral_classifications", r.behavioral_classifications},
                   {"sweeps", r.sweeps},
                   {"warnings", r.warnings}};
  }
  fdb.save(p("db:functionality.jsonl"));
  bdb.save(p("db:behavioral.jsonl"));
  index.save(p("db:signatures.jsonl"));
  std::vector<json> rows;
  for (const auto& [label, e] : features) rows.push_back({{"label", label}, {"embedding", e.values}});
  write_jsonl(p("out:label_features.jsonl"), rows);
  write_json(p("out:enrich_stats.json"), stats);
  manifest["embedding"] = {{"identity", embedder().identity()}, {"dimension", embedder().dimension()}};
  return stats;
}

json Pipeline::Impl::run_detect() {
  auto train = graph::ProvenanceGraph::load(p("out:enriched_train_nodes.jsonl"), p("out:enriched_train_edges.jsonl"));
  auto test = graph::ProvenanceGraph::load(p("out:enriched_test_nodes.jsonl"), p("out:enriched_test_edges.jsonl"));
  std::vector<detect::NodeScore> scores;
  std::vector<std::string> warnings;
  json stats;
  if (auto plugin = cfg.get("detect.plugin"); plugin && !plugin->empty()) {
    auto work = out / "detector_work";
    fs::create_directories(work);
    scores = detect::run_detector_plugin(*plugin, train, test, work, &warnings);
    stats["detector"] = "plugin";
  } else {
    auto model = detect::fit_reference_detector(train);
    scores = detect::score_nodes(model, test);
    stats["detector"] = "rarity";
  }
  write_text_atomic(p("out:scores.csv"), detect::scores_csv(scores));
  auto n_seed = static_cast<std::size_t>(cfg.get_int("detect.n_seed", 10));
  if (scores.empty()) throw Error("the test graph has no nodes to score");
  auto attack = detect::build_attack_graph(test, scores, n_seed);
  detect::save_attack_graph(p("out:attack_graph.jsonl"), attack);
  stats["scored_nodes"] = scores.size();
  stats["seeds"] = attack.seed_keys;
  stats["attack_graph_nodes"] = attack.nodes.size();
  stats["attack_graph_edges"] = attack.edges.size();
  stats["warnings"] = warnings;
  write_json(p("out:detect_stats.json"), stats);
  return stats;
}

json Pipeline::Impl::run_explain() {
  auto attack = detect::load_attack_graph(p("out:attack_graph.jsonl"));
  if (attack.empty()) throw Error("empty attack graph");
  auto fdb = enrich::FunctionalityDB::load(p("db:functionality.jsonl"));
  auto result = assistant::explain(chat(), attack, fdb, catalog());
  json j = {{"summary", result.summary},
            {"unknown_entities", result.unknown},
            {"linearized", result.linearized.lines},
            {"interaction_count", result.linearized.total_count}};
  write_json(p("out:summary.json"), j);
  write_text_atomic(p("out:report.md"), assistant::render_report(result));
  return {{"tactics", result.summary.tactics.size()}, {"unknown_entities", result.unknown.size()}};
}

json Pipeline::Impl::run_eval() {
  if (manifest.contains("embedding")) {
    auto dim = manifest["embedding"].value("dimension", std::size_t{0});
    if (dim != embedder().dimension())
      throw Error("embedding dimension mismatch: artifacts use " + std::to_string(dim) + ", configured provider has " +
                  std::to_string(embedder().dimension()));
  }
  auto test = graph::ProvenanceGraph::load(p("out:enriched_test_nodes.jsonl"), p("out:enriched_test_edges.jsonl"));
  auto attack = detect::load_attack_graph(p("out:attack_graph.jsonl"));
  auto fdb = enrich::FunctionalityDB::load(p("db:functionality.jsonl"));
  auto bdb = enrich::BehavioralDB::load(p("db:behavioral.jsonl"));
  auto index = enrich::SignatureIndex::load(p("db:signatures.jsonl"));
  auto cat = catalog();
  json metrics = json::object();
  std::vector<std::string> warnings;

  auto rule_stats = json::parse(read_text(p("out:rule_stats.json")));
  metrics["rule_unmatched_rate"] = rule_stats.value("unmatched_rate", 0.0);

  if (auto truth = cfg.path("eval.line_truth")) {
    std::map<std::string, std::int64_t> assigned;
    for (const auto& a : read_jsonl_values(p("out:assignments.jsonl")))
      assigned[a.at("log_id").get<std::string>()] = a.at("cluster_id").get<std::int64_t>();
    std::vector<std::string> formats;
    std::vector<std::int64_t> clusters;
    for (const auto& t : read_jsonl_values(*truth)) {
      auto it = assigned.find(t.at("log_id").get<std::string>());
      if (it == assigned.end()) continue;
      formats.push_back(t.at("format").get<std::string>());
      clusters.push_back(it->second);
    }
    if (formats.size() >= 2) metrics["clustering_ari"] = eval::adjusted_rand_index(clusters, formats);
  }

  if (auto truth = cfg.path("eval.attack_truth")) {
    std::map<std::string, std::string> attack_of;
    for (const auto& t : read_jsonl_values(*truth))
      attack_of[t.at("node_key").get<std::string>()] = t.at("attack").get<std::string>();
    auto scores = detect::read_scores_csv(read_text(p("out:scores.csv")), test, &warnings);
    std::vector<eval::RankedItem> items;
    std::set<std::string> present;
    for (const auto& s : scores) {
      eval::RankedItem item{s.node_key, s.score, std::nullopt};
      if (auto it = attack_of.find(s.node_key); it != attack_of.end()) {
        item.attack_id = it->second;
        present.insert(it->second);
      }
      items.push_back(item);
    }
    for (const auto& [key, a] : attack_of)
      if (!present.count(a)) warnings.push_back("attack " + a + " has no node in the test graph");
    auto guarded = [&](const char* name, auto fn) {
      try {
        metrics[name] = fn(items);
      } catch (const Error& e) {
        metrics[name] = nullptr;
        warnings.push_back(std::string(name) + ": " + e.what());
      }
    };
    guarded("auc_roc", eval::auc_roc);
    guarded("auc_pr", eval::auc_pr);
    guarded("adp", eval::adp);
    metrics["attacks_present"] = present.size();
  }

  auto judge_owner = make_judges();
  std::optional<assistant::Judges> judges;
  if (judge_owner.size() == 3) judges = assistant::Judges{judge_owner[0].get(), judge_owner[1].get(), judge_owner[2].get()};
  if (judges) {
    auto summary = json::parse(read_text(p("out:summary.json"))).at("summary").get<assistant::AttackSummary>();
    auto tc = assistant::tactic_correctness(summary, *judges, cat, &warnings);
    metrics["alpha_tc"] = tc ? json(*tc) : json();
  }

  eval::SweepContext ctx;
  ctx.graph = &test;
  ctx.attack = &attack;
  ctx.fdb = &fdb;
  ctx.bdb = &bdb;
  ctx.index = &index;
  ctx.assistant = &chat();
  ctx.judges = judges;
  ctx.embedder = &embedder();
  ctx.catalog = &cat;
  ctx.max_sweeps = static_cast<int>(cfg.get_int("eval.max_sweeps", 0));
  auto eval_seed = static_cast<std::uint64_t>(cfg.get_int("eval.seed", cfg.get_int("seed", 0)));
  auto rows = eval::robustness_sweep(ctx, parse_rates(cfg), eval_seed);
  write_jsonl(p("out:sweep.jsonl"), rows);
  std::string csv = "rate,poisoned,relabeled,alpha_tc,alpha_r,similarity,error\n";
  for (const auto& r : rows)
    csv += fmt_double(r.rate) + "," + std::to_string(r.poisoned) + "," + std::to_string(r.relabeled) + "," +
           opt_cell(r.alpha_tc) + "," + opt_cell(r.alpha_r) + "," + opt_cell(r.similarity) + "," +
           graph::csv_field(r.error) + "\n";
  write_text_atomic(p("out:sweep.csv"), csv);

  metrics["warnings"] = warnings;
  write_json(p("out:metrics.json"), metrics);
  std::string table = "metric,value\n";
  for (const auto& [k, v] : metrics.items()) {
    if (k == "warnings") continue;
    table += k + "," + (v.is_null() ? std::string() : v.is_number_float() ? fmt_double(v.get<double>()) : v.dump()) + "\n";
  }
  write_text_atomic(p("out:metrics.csv"), table);
  json stats = metrics;
  stats["sweep_rows"] = rows.size();
  return stats;
}

Pipeline::Pipeline(RunConfig config) : impl_(std::make_unique<Impl>()) {
  validate(config);
  impl_->cfg = std::move(config);
  db_dir_ = impl_->cfg.required_path("paths.db_dir");
  out_dir_ = impl_->cfg.required_path("paths.out_dir");
  impl_->db = db_dir_;
  impl_->out = out_dir_;
  fs::create_directories(db_dir_);
  fs::create_directories(out_dir_);
  impl_->lock = std::make_unique<DirLock>(db_dir_);
  auto mpath = out_dir_ / "manifest.json";
  impl_->manifest = json::object();
  if (fs::exists(mpath)) {
    try {
      impl_->manifest = json::parse(read_text(mpath));
    } catch (const json::exception& e) {
      throw StageError("manifest", std::string("unreadable run manifest: ") + e.what());
    }
  }
}

Pipeline::~Pipeline() = default;

nlohmann::json Pipeline::manifest() const { return impl_->manifest; }

StageOutcome Pipeline::run(Stage stage, bool force) {
  auto& I = *impl_;
  auto name = stage_name(stage);
  auto spec = spec_of(stage);

  json inputs = json::object();
  inputs["config"] = I.config_digest(spec);
  for (const auto& in : spec.inputs) {
    auto path = I.resolve(in.name);
    if (path.empty()) {
      if (optional_input(in.name)) continue;
      throw StageError(name, "missing " + in.what);
    }
    if (!fs::exists(path)) {
      if (in.name.rfind("cfg:", 0) == 0 && optional_input(in.name)) continue;
      throw StageError(name, "missing " + in.what + " (" + path.string() + ")");
    }
    auto digest = digest_file(path);
    if (auto rec = I.recorded_output(in.name); rec && rec->first != name && rec->second != digest)
      throw StageError(name, "corrupt artifact " + path.string() + ": content differs from what stage " + rec->first +
                                 " recorded");
    inputs[in.name] = digest;
  }

  if (I.manifest.contains("stages") && I.manifest["stages"].contains(name)) {
    const auto& prev = I.manifest["stages"][name];
    bool outputs_intact = true;
    for (const auto& o : spec.outputs) {
      auto path = I.resolve(o);
      if (!fs::exists(path) || !prev["outputs"].contains(o)) {
        outputs_intact = false;
        continue;
      }
      if (digest_file(path) != prev["outputs"][o].get<std::string>() && !force)
        throw StageError(name, "corrupt artifact " + path.string() + ": content differs from the recorded digest");
    }
    if (!force && outputs_intact && prev["inputs"] == inputs)
      return {stage, true, "inputs unchanged, skipped"};
  }

  json stats;
  try {
    switch (stage) {
      case Stage::Cluster: stats = I.run_cluster(); break;
      case Stage::Extract: stats = I.run_extract(); break;
      case Stage::Rules: stats = I.run_rules(); break;
      case Stage::Build: stats = I.run_build(); break;
      case Stage::Enrich: stats = I.run_enrich(); break;
      case Stage::Detect: stats = I.run_detect(); break;
      case Stage::Explain: stats = I.run_explain(); break;
      case Stage::Eval: stats = I.run_eval(); break;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    I.save_manifest();
    throw StageError(name, e.what());
  }

  json outputs = json::object();
  for (const auto& o : spec.outputs) outputs[o] = digest_file(I.resolve(o));
  I.manifest["stages"][name] = {{"inputs", inputs}, {"outputs", outputs}, {"stats", stats}};
  I.save_manifest();
  return {stage, false, stats.dump()};
}

std::vector<StageOutcome> Pipeline::run_all(bool force) {
  std::vector<StageOutcome> out;
  for (auto s : kAllStages) out.push_back(run(s, force));
  return out;
}

}  // namespace autoprov::pipeline
