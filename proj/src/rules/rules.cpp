#include "autoprov/rules/rules.hpp"

#include <algorithm>
#include <set>

#include <boost/regex.hpp>

#include "autoprov/core/hash.hpp"
#include "autoprov/core/jsonl.hpp"
#include "autoprov/core/text.hpp"
#include "autoprov/core/timestamp.hpp"
#include "autoprov/llm/parse.hpp"

namespace autoprov::rules {

std::string field_name(Field f) {
  switch (f) {
    case Field::Sid: return "Sid";
    case Field::Stype: return "Stype";
    case Field::Sname: return "Sname";
    case Field::Did: return "Did";
    case Field::Dtype: return "Dtype";
    case Field::Dname: return "Dname";
    case Field::Itype: return "Itype";
    case Field::Time: return "time";
  }
  return "?";
}

std::optional<Field> field_from_name(std::string_view name) {
  for (auto f : kAllFields)
    if (text::iequals(field_name(f), name)) return f;
  return std::nullopt;
}

std::string task_for(Field f) {
  switch (f) {
    case Field::Itype: return "TASK 2";
    case Field::Time: return "TASK 3";
    case Field::Sname:
    case Field::Dname: return "TASK 4";
    default: return "TASK 1";
  }
}

bool is_mandatory(Field f) { return f == Field::Sid || f == Field::Did || f == Field::Itype; }

std::optional<std::string> field_value(const ProvenanceRecord& r, Field f) {
  switch (f) {
    case Field::Sid: return r.sid;
    case Field::Stype: return r.stype;
    case Field::Sname: return r.sname;
    case Field::Did: return r.did;
    case Field::Dtype: return r.dtype;
    case Field::Dname: return r.dname;
    case Field::Itype: return r.itype;
    case Field::Time: return r.time ? std::optional(r.time->raw) : std::nullopt;
  }
  return std::nullopt;
}

namespace {

void set_field(ProvenanceRecord& r, Field f, std::string v) {
  switch (f) {
    case Field::Sid: r.sid = std::move(v); break;
    case Field::Stype: r.stype = std::move(v); break;
    case Field::Sname: r.sname = std::move(v); break;
    case Field::Did: r.did = std::move(v); break;
    case Field::Dtype: r.dtype = std::move(v); break;
    case Field::Dname: r.dname = std::move(v); break;
    case Field::Itype: r.itype = std::move(v); break;
    case Field::Time: r.time = parse_timestamp(v); break;
  }
}

nlohmann::json fields_json(const std::map<Field, FieldRule>& fields, bool with_tokens) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [f, rule] : fields) {
    if (with_tokens)
      j[field_name(f)] = {{"pattern", rule.pattern}, {"token_map", rule.token_map}};
    else
      j[field_name(f)] = rule.pattern;
  }
  return j;
}

std::optional<std::string> first_capture(const boost::regex& re, const std::string& log) {
  boost::smatch m;
  if (!boost::regex_search(log, m, re) || !m[1].matched) return std::nullopt;
  return m[1].str();
}

}  // namespace

void to_json(nlohmann::json& j, const RuleSet& r) {
  j = {{"rule_id", r.rule_id},
       {"cluster_id", r.cluster_id},
       {"fields", fields_json(r.fields, true)},
       {"source_log_id", r.source_log_id},
       {"source_record_fingerprint", r.source_record_fingerprint}};
}

void from_json(const nlohmann::json& j, RuleSet& r) {
  r.rule_id = j.at("rule_id").get<std::string>();
  r.cluster_id = j.at("cluster_id").get<std::int64_t>();
  r.fields.clear();
  for (const auto& [name, v] : j.at("fields").items()) {
    auto f = field_from_name(name);
    if (!f) throw ParseError("unknown rule field '" + name + "'");
    FieldRule rule;
    rule.pattern = v.at("pattern").get<std::string>();
    rule.token_map = v.value("token_map", std::map<std::string, std::string>{});
    r.fields[*f] = std::move(rule);
  }
  r.source_log_id = j.at("source_log_id").get<std::string>();
  r.source_record_fingerprint = j.value("source_record_fingerprint", "");
}

std::string compute_rule_id(const std::map<Field, FieldRule>& fields) {
  return digest_text(fields_json(fields, false).dump());
}

std::string record_fingerprint(const ProvenanceRecord& r) {
  nlohmann::json j = r;
  j.erase("origin");
  j.erase("source_log_id");
  return digest_text(j.dump());
}

SyntaxCheck check_syntax(const std::string& p) {
  int groups = 0;
  bool in_class = false;
  for (std::size_t i = 0; i < p.size(); ++i) {
    char c = p[i];
    if (c == '\\') {
      if (i + 1 < p.size()) {
        char n = p[i + 1];
        if (!in_class && ((n >= '1' && n <= '9') || n == 'k' || n == 'g'))
          return {false, "backreferences are not supported"};
      }
      ++i;
      continue;
    }
    if (in_class) {
      if (c == ']') in_class = false;
      continue;
    }
    if (c == '[') {
      in_class = true;
      if (i + 1 < p.size() && p[i + 1] == '^') ++i;
      if (i + 1 < p.size() && p[i + 1] == ']') ++i;
      continue;
    }
    if (c != '(') continue;
    if (i + 1 < p.size() && p[i + 1] == '?') {
      char k = i + 2 < p.size() ? p[i + 2] : '\0';
      if (k == ':') continue;
      if (k == '=' || k == '!') return {false, "lookaround is not supported"};
      if (k == '<') {
        char k2 = i + 3 < p.size() ? p[i + 3] : '\0';
        if (k2 == '=' || k2 == '!') return {false, "lookaround is not supported"};
        return {false, "named groups are not supported"};
      }
      if (k == 'P' || k == '\'') return {false, "named groups are not supported"};
      continue;  // inline modifiers such as (?i)
    }
    ++groups;
  }
  if (groups == 0) return {false, "missing capture group"};
  if (groups > 1) return {false, "more than one capture group"};
  if (p.find("(.+)") != std::string::npos || p.find("(.*)") != std::string::npos)
    return {false, "overly broad capture"};
  try {
    boost::regex re(p);
  } catch (const boost::regex_error& e) {
    return {false, std::string("does not compile: ") + e.what()};
  }
  return {};
}

Induced parse_rule_response(std::string_view t) {
  Induced out;
  bool no_regex = false;
  for (const auto& raw : text::split_lines(t)) {
    auto line = text::trim(raw);
    auto strip_ticks = [](std::string_view v) {
      v = text::trim(v);
      if (v.size() >= 2 && v.front() == '`' && v.back() == '`') v = v.substr(1, v.size() - 2);
      return std::string(v);
    };
    if (line.size() >= 6 && text::iequals(line.substr(0, 6), "Regex:")) {
      auto v = strip_ticks(line.substr(6));
      if (text::iequals(v, "No Regex") || v.empty())
        no_regex = true;
      else if (!out.pattern)
        out.pattern = v;
    } else if (line.size() >= 6 && text::iequals(line.substr(0, 6), "Token:")) {
      auto v = llm::strip_wrapping(strip_ticks(line.substr(6)));
      if (!v.empty() && !text::iequals(v, "none") && !text::iequals(v, "n/a") && !out.token)
        out.token = v;
    } else if (text::iequals(line, "No Regex")) {
      no_regex = true;
    }
  }
  if (no_regex && !out.pattern) out.token.reset();
  return out;
}

Induced induce_field_rule(llm::ChatProvider& provider, const std::string& log, Field field,
                          const std::string& value, const std::string& feedback,
                          const std::string& platform) {
  if (value.empty()) throw Error("induce_field_rule: empty field value");
  std::map<std::string, std::string> b = {{"log", log},         {"field", field_name(field)},
                                          {"task", task_for(field)}, {"value", value},
                                          {"feedback", feedback}};
  if (!platform.empty()) b["platform"] = platform;
  return parse_rule_response(provider.complete(llm::ChatRequest::make(llm::PromptId::P5, b)));
}

SyntaxCheck validate_rule(const std::string& pattern, const std::string& log,
                          const std::string& expected, const std::optional<std::string>& token) {
  auto syntax = check_syntax(pattern);
  if (!syntax.ok) return syntax;
  auto cap = first_capture(boost::regex(pattern), log);
  if (!cap) return {false, "pattern does not match the log"};
  const auto& want = token ? *token : expected;
  if (*cap != want) return {false, "captured '" + *cap + "' instead of '" + want + "'"};
  return {};
}

BuildOutcome build_ruleset(llm::ChatProvider& provider, const std::string& log,
                           const ProvenanceRecord& record, std::int64_t cluster_id, int max_repair,
                           const std::string& platform) {
  BuildOutcome out;
  RuleSet rs;
  rs.cluster_id = cluster_id;
  rs.source_log_id = record.source_log_id;
  rs.source_record_fingerprint = record_fingerprint(record);
  bool rejected = false;
  for (auto f : kAllFields) {
    auto value = field_value(record, f);
    if (!value || value->empty()) continue;
    std::string feedback = "none";
    std::optional<FieldRule> accepted;
    std::string cause;
    for (int attempt = 0; attempt <= max_repair && !accepted; ++attempt) {
      Induced ind;
      try {
        ind = induce_field_rule(provider, log, f, *value, feedback, platform);
      } catch (const Error& e) {
        cause = std::string("provider: ") + e.what();
        break;
      }
      if (!ind.pattern) {
        cause = "No Regex";
        break;
      }
      // A token is only needed when the value is not in the log verbatim.
      auto token = ind.token;
      if (token && *token == *value) token.reset();
      auto check = validate_rule(*ind.pattern, log, *value, token);
      if (check.ok) {
        FieldRule fr{*ind.pattern, {}};
        if (token) fr.token_map[*token] = *value;
        accepted = std::move(fr);
      } else {
        cause = check.cause;
        feedback = "The previous regex `" + *ind.pattern + "` is incorrect: " + check.cause +
                   ". Fix it by preserving the exact log structure.";
      }
    }
    if (accepted) {
      rs.fields[f] = std::move(*accepted);
    } else {
      out.report[f] = cause;
      if (is_mandatory(f)) rejected = true;
    }
  }
  if (!rejected) {
    rs.rule_id = compute_rule_id(rs.fields);
    out.rule = std::move(rs);
  }
  return out;
}

struct CompiledRuleSet::Impl {
  std::vector<std::pair<Field, boost::regex>> patterns;
};

CompiledRuleSet::CompiledRuleSet(RuleSet rule) : rule_(std::move(rule)), impl_(std::make_unique<Impl>()) {
  for (const auto& [f, fr] : rule_.fields) {
    try {
      impl_->patterns.emplace_back(f, boost::regex(fr.pattern));
    } catch (const boost::regex_error& e) {
      throw ParseError("rule " + rule_.rule_id + " field " + field_name(f) + ": " + e.what());
    }
  }
}

CompiledRuleSet::~CompiledRuleSet() = default;
CompiledRuleSet::CompiledRuleSet(CompiledRuleSet&&) noexcept = default;
CompiledRuleSet& CompiledRuleSet::operator=(CompiledRuleSet&&) noexcept = default;

std::optional<ProvenanceRecord> CompiledRuleSet::apply(const std::string& log,
                                                       const std::string& log_id) const {
  for (auto f : {Field::Sid, Field::Did, Field::Itype})
    if (!rule_.fields.count(f)) return std::nullopt;
  ProvenanceRecord r;
  for (const auto& [f, re] : impl_->patterns) {
    auto cap = first_capture(re, log);
    if (!cap || cap->empty()) {
      if (is_mandatory(f)) return std::nullopt;
      continue;
    }
    const auto& tokens = rule_.fields.at(f).token_map;
    auto it = tokens.find(*cap);
    set_field(r, f, it == tokens.end() ? *cap : it->second);
  }
  r.origin = Origin::rule(rule_.rule_id);
  r.source_log_id = log_id;
  return r;
}

std::optional<ProvenanceRecord> apply_ruleset(const RuleSet& rule, const std::string& log,
                                              const std::string& log_id) {
  return CompiledRuleSet(rule).apply(log, log_id);
}

bool RuleDB::insert(RuleSet rule) {
  if (rule.rule_id.empty()) rule.rule_id = compute_rule_id(rule.fields);
  if (auto it = by_id_.find(rule.rule_id); it != by_id_.end()) {
    // Same patterns: only new token mappings are absorbed, never overwritten.
    RuleSet merged = rules_[it->second].rule();
    bool grew = false;
    for (auto& [f, fr] : merged.fields)
      for (const auto& kv : rule.fields.at(f).token_map) grew |= fr.token_map.insert(kv).second;
    if (grew) rules_[it->second] = CompiledRuleSet(std::move(merged));
    return false;
  }
  const auto cid = rule.cluster_id;
  by_id_[rule.rule_id] = rules_.size();
  by_cluster_[cid].push_back(rules_.size());
  rules_.emplace_back(std::move(rule));
  return true;
}

std::vector<ProvenanceRecord> RuleDB::apply(const std::string& log, const std::string& log_id,
                                            std::int64_t cluster_id) const {
  std::vector<ProvenanceRecord> out;
  auto add = [&](std::size_t i) {
    auto r = rules_[i].apply(log, log_id);
    if (!r) return;
    for (const auto& prev : out)
      if (same_fields(prev, *r)) return;
    out.push_back(std::move(*r));
  };
  std::set<std::size_t> tried;
  if (auto it = by_cluster_.find(cluster_id); it != by_cluster_.end())
    for (auto i : it->second) {
      add(i);
      tried.insert(i);
    }
  if (out.empty())
    for (std::size_t i = 0; i < rules_.size(); ++i)
      if (!tried.count(i)) add(i);
  return out;
}

void RuleDB::save(const std::filesystem::path& path) const {
  std::vector<RuleSet> plain;
  for (const auto& r : rules_) plain.push_back(r.rule());
  write_jsonl(path, plain);
}

RuleDB RuleDB::load(const std::filesystem::path& path) {
  RuleDB db;
  for (auto& r : read_jsonl<RuleSet>(path)) db.insert(std::move(r));
  return db;
}

}  // namespace autoprov::rules
