#include <charconv>
#include <cmath>
#include <set>

#include "autoprov/core/jsonl.hpp"
#include "autoprov/core/text.hpp"
#include "autoprov/pipeline/pipeline.hpp"

namespace autoprov::pipeline {

namespace {

std::string unquote(std::string_view v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
    return std::string(v.substr(1, v.size() - 2));
  return std::string(v);
}

void set_pair(RunConfig& c, std::string_view line, const std::string& section, std::size_t lineno) {
  auto eq = line.find('=');
  if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
  auto key = std::string(text::trim(line.substr(0, eq)));
  if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
  if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
  c.values[key] = unquote(text::trim(line.substr(eq + 1)));
}

// Keys whose values must parse as numbers, with inclusive bounds.
struct NumericKey {
  const char* key;
  double lo;
  double hi;
  bool integer;
};

constexpr NumericKey kNumeric[] = {
    {"seed", 0, 1.8e19, true},
    {"cluster.radius", 1e-9, 2, false},
    {"cluster.decay", 0, 1e9, false},
    {"cluster.w_min", 0, 1e18, false},
    {"cluster.k", 1, 1e9, true},
    {"cluster.m", 1, 1e9, true},
    {"cluster.window_size", 1, 1e12, true},
    {"cluster.reservoir", 1, 1e9, true},
    {"embed.dimension", 1, 1e7, true},
    {"cpe.n_votes", 1, 1e4, true},
    {"cpe.max_parallel", 1, 1024, true},
    {"cpe.pool_capacity", 0, 1e6, true},
    {"cpe.pool_sample", 0, 1e6, true},
    {"rules.max_repair", 0, 100, true},
    {"graph.bucket_micros", 1, 1e18, true},
    {"enrich.max_sweeps", 0, 1e4, true},
    {"enrich.max_parallel", 1, 1024, true},
    {"detect.n_seed", 1, 1e9, true},
    {"eval.seed", 0, 1.8e19, true},
    {"eval.max_sweeps", 0, 1e6, true},
};

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k = {"input.train",        "input.test",        "paths.db_dir",      "paths.out_dir",
                               "chat.stub_script",   "chat.endpoint",     "chat.model",        "chat.api_key_env",
                               "chat.timeout_ms",    "chat.retry_limit",  "chat.max_in_flight", "embed.kind",
                               "embed.endpoint",     "embed.model",       "embed.api_key_env", "cpe.platform",
                               "enrich.manual_labels", "enrich.functionality_db", "detect.plugin",
                               "assistant.tactics",  "judge.stub_script", "judge.models",      "eval.rates",
                               "eval.attack_truth",  "eval.line_truth"};
    for (const auto& n : kNumeric) k.insert(n.key);
    return k;
  }();
  return keys;
}

double parse_number(const std::string& key, const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": not a number: '" + v + "'");
  return out;
}

}  // namespace

std::optional<std::string> RunConfig::get(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) return std::nullopt;
  return it->second;
}

std::string RunConfig::get_or(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? parse_number(key, *v) : fallback;
}

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || p != v->data() + v->size()) throw ConfigError(key + ": not an integer: '" + *v + "'");
  return out;
}

std::optional<std::filesystem::path> RunConfig::path(const std::string& key) const {
  auto v = get(key);
  if (!v || v->empty()) return std::nullopt;
  std::filesystem::path p(*v);
  return p.is_absolute() ? p : base_dir / p;
}

std::filesystem::path RunConfig::required_path(const std::string& key) const {
  auto p = path(key);
  if (!p) throw ConfigError("missing required key " + key);
  return *p;
}

RunConfig parse_config(std::string_view text_in, const std::vector<std::string>& overrides,
                       std::filesystem::path base_dir) {
  RunConfig c;
  c.base_dir = std::move(base_dir);
  std::string section;
  std::size_t lineno = 0;
  for (const auto& raw : text::split_lines(text_in)) {
    ++lineno;
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    set_pair(c, line, section, lineno);
  }
  for (const auto& o : overrides) set_pair(c, o, "", 0);
  return c;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  auto base = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  return parse_config(read_text(path), overrides, base);
}

void validate(const RunConfig& c) {
  for (const auto& [k, v] : c.values)
    if (!known_keys().count(k)) throw ConfigError("unknown key " + k);
  if (!c.get("seed")) throw ConfigError("missing required key seed");
  for (const auto& n : kNumeric) {
    auto v = c.get(n.key);
    if (!v) continue;
    double x = parse_number(n.key, *v);
    if (n.integer && std::floor(x) != x)
      throw ConfigError(std::string(n.key) + ": expected an integer");
    if (x < n.lo || x > n.hi) throw ConfigError(std::string(n.key) + ": out of range: " + *v);
  }
  for (auto key : {"input.train", "input.test", "paths.db_dir", "paths.out_dir"}) c.required_path(key);
  for (auto key : {"input.train", "input.test", "chat.stub_script", "enrich.manual_labels", "enrich.functionality_db",
                   "assistant.tactics", "judge.stub_script", "eval.attack_truth", "eval.line_truth"}) {
    auto p = c.path(key);
    if (p && !std::filesystem::exists(*p)) throw ConfigError(std::string(key) + ": file not found: " + p->string());
  }
  bool stub = c.path("chat.stub_script").has_value();
  bool live = c.get("chat.endpoint").has_value();
  if (stub == live) throw ConfigError("set exactly one of chat.stub_script and chat.endpoint");
  if (live && !c.get("chat.model")) throw ConfigError("chat.endpoint needs chat.model");
  auto kind = c.get_or("embed.kind", "hashing");
  if (kind != "hashing" && kind != "http") throw ConfigError("embed.kind must be hashing or http");
  if (kind == "http" && (!c.get("embed.endpoint") || !c.get("embed.model")))
    throw ConfigError("embed.kind = http needs embed.endpoint and embed.model");
  if (auto models = c.get("judge.models")) {
    if (text::split(*models, ',').size() != 3) throw ConfigError("judge.models needs three comma-separated models");
    if (!live) throw ConfigError("judge.models needs chat.endpoint");
  }
  if (auto rates = c.get("eval.rates"); rates && !text::trim(*rates).empty())
    for (auto r : text::split(*rates, ',')) {
      double x = parse_number("eval.rates", std::string(text::trim(r)));
      if (x < 0 || x > 100) throw ConfigError("eval.rates: rate outside [0, 100]: " + std::string(r));
    }
}

std::string corpus_config_text(const std::string& dir) {
  std::string p = dir.empty() ? "" : dir + "/";
  return "seed = 7\n\n"
         "[input]\ntrain = \"" + p + "train.log\"\ntest = \"" + p + "test.log\"\n\n"
         "[paths]\ndb_dir = \"run/db\"\nout_dir = \"run/out\"\n\n"
         "[chat]\nstub_script = \"" + p + "stub_script.json\"\n\n"
         "[cluster]\nradius = 0.3\nk = 32\nm = 3\nwindow_size = 1000\n\n"
         "[cpe]\nn_votes = 7\nmax_parallel = 4\n\n"
         "[detect]\nn_seed = 10\n\n"
         "[eval]\nrates = \"0,10,20,30,40,50,60,70,80,90,100\"\nattack_truth = \"" + p +
         "attacks.jsonl\"\nline_truth = \"" + p + "truth_test.jsonl\"\n";
}

}  // namespace autoprov::pipeline
