#include "autoprov/core/records.hpp"

#include <cstdio>

#include "autoprov/core/error.hpp"
#include "autoprov/core/jsonl.hpp"
#include "autoprov/core/text.hpp"

namespace autoprov {
namespace {

template <class T>
void put_opt(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <class T>
std::optional<T> get_opt(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

}  // namespace

bool same_fields(const ProvenanceRecord& a, const ProvenanceRecord& b) {
  auto raw = [](const ProvenanceRecord& r) { return r.time ? std::optional(r.time->raw) : std::nullopt; };
  return a.sid == b.sid && a.stype == b.stype && a.sname == b.sname && a.did == b.did &&
         a.dtype == b.dtype && a.dname == b.dname && a.itype == b.itype && raw(a) == raw(b);
}

void validate(const ProvenanceRecord& r) {
  if (r.sid.empty()) throw ParseError("provenance record with empty sid");
  if (r.did.empty()) throw ParseError("provenance record with empty did");
  if (r.itype.empty()) throw ParseError("provenance record with empty itype");
}

void to_json(nlohmann::json& j, const LogRecord& r) {
  j = {{"log_id", r.log_id},
       {"raw_text", r.raw_text},
       {"arrival_seq", r.arrival_seq},
       {"window_id", r.window_id}};
  put_opt(j, "source_tag", r.source_tag);
}

void from_json(const nlohmann::json& j, LogRecord& r) {
  r.log_id = j.at("log_id").get<std::string>();
  r.raw_text = j.at("raw_text").get<std::string>();
  r.arrival_seq = j.at("arrival_seq").get<std::int64_t>();
  r.window_id = j.at("window_id").get<std::int64_t>();
  r.source_tag = get_opt<std::string>(j, "source_tag");
}

void to_json(nlohmann::json& j, const Origin& o) {
  if (o.kind == Origin::Kind::Cpe)
    j = {{"kind", "CPE"}};
  else
    j = {{"kind", "Rule"}, {"rule_id", o.rule_id}};
}

void from_json(const nlohmann::json& j, Origin& o) {
  auto kind = j.at("kind").get<std::string>();
  if (kind == "CPE") {
    o = Origin::cpe();
  } else if (kind == "Rule") {
    o = Origin::rule(j.at("rule_id").get<std::string>());
  } else {
    throw ParseError("unknown origin kind '" + kind + "'");
  }
}

void to_json(nlohmann::json& j, const ProvenanceRecord& r) {
  j = {{"sid", r.sid}, {"did", r.did}, {"itype", r.itype}, {"origin", r.origin},
       {"source_log_id", r.source_log_id}};
  put_opt(j, "stype", r.stype);
  put_opt(j, "sname", r.sname);
  put_opt(j, "dtype", r.dtype);
  put_opt(j, "dname", r.dname);
  put_opt(j, "time", r.time);
}

void from_json(const nlohmann::json& j, ProvenanceRecord& r) {
  r.sid = j.at("sid").get<std::string>();
  r.did = j.at("did").get<std::string>();
  r.itype = j.at("itype").get<std::string>();
  r.origin = j.at("origin").get<Origin>();
  r.source_log_id = j.at("source_log_id").get<std::string>();
  r.stype = get_opt<std::string>(j, "stype");
  r.sname = get_opt<std::string>(j, "sname");
  r.dtype = get_opt<std::string>(j, "dtype");
  r.dname = get_opt<std::string>(j, "dname");
  r.time = get_opt<Timestamp>(j, "time");
  validate(r);
}

std::vector<LogRecord> read_log_file(const std::filesystem::path& path, const std::string& prefix) {
  std::vector<LogRecord> out;
  auto lines = text::split_lines(read_text(path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    char id[32];
    std::snprintf(id, sizeof id, "-%06zu", i + 1);
    LogRecord r;
    r.log_id = prefix + id;
    r.raw_text = lines[i];
    r.arrival_seq = static_cast<std::int64_t>(out.size());
    r.source_tag = prefix;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace autoprov
