#include "autoprov/llm/scripted.hpp"

#include "autoprov/core/hash.hpp"
#include "autoprov/core/jsonl.hpp"

namespace autoprov::llm {
namespace {

// Names of (?<name>...) and (?P<name>...) groups in pattern text.
std::vector<std::string> group_names(const std::string& pattern) {
  std::vector<std::string> names;
  static const boost::regex named(R"(\(\?P?<([A-Za-z_][A-Za-z0-9_]*)>)");
  for (boost::sregex_iterator it(pattern.begin(), pattern.end(), named), end; it != end; ++it)
    names.push_back((*it)[1].str());
  return names;
}

}  // namespace

std::string expand_captures(std::string_view response,
                            const std::map<std::string, std::string>& captures) {
  std::string out;
  out.reserve(response.size());
  for (std::size_t i = 0; i < response.size(); ++i) {
    char c = response[i];
    if (c != '@' || i + 1 >= response.size()) {
      out += c;
      continue;
    }
    if (response[i + 1] == '@') {
      out += '@';
      ++i;
      continue;
    }
    if (response[i + 1] == '{') {
      auto close = response.find('}', i + 2);
      if (close != std::string_view::npos) {
        auto it = captures.find(std::string(response.substr(i + 2, close - i - 2)));
        if (it != captures.end()) out += it->second;
        i = close;
        continue;
      }
    }
    out += c;
  }
  return out;
}

ScriptedResponder::Reply ScriptedResponder::parse_reply(const nlohmann::json& j) {
  if (j.is_string()) return {j.get<std::string>(), ""};
  if (j.is_object() && j.contains("error")) {
    auto kind = j.at("error").get<std::string>();
    if (kind != "transport" && kind != "protocol")
      throw ParseError("script: unknown error kind '" + kind + "'");
    return {"", kind};
  }
  throw ParseError("script: a response must be a string or {\"error\": ...}");
}

ScriptedResponder::Pattern ScriptedResponder::compile(const std::string& pattern) {
  return {boost::regex(pattern), group_names(pattern)};
}

ScriptedResponder::ScriptedResponder(const nlohmann::json& script) {
  identity_ = "scripted:" + digest_text(to_jsonl_line(script));
  try {
    for (const auto& r : script.value("rules", nlohmann::json::array())) {
      Rule rule;
      if (r.contains("template")) {
        auto name = r.at("template").get<std::string>();
        rule.prompt = prompt_from_name(name);
        if (!rule.prompt) throw ParseError("script: unknown template '" + name + "'");
      }
      for (const auto& c : r.value("contains", nlohmann::json::array()))
        rule.contains.push_back(c.get<std::string>());
      if (r.contains("regex")) rule.prompt_regex = compile(r.at("regex").get<std::string>());
      if (r.contains("binding_regex"))
        for (const auto& [k, v] : r.at("binding_regex").items())
          rule.binding_regex.emplace_back(k, compile(v.get<std::string>()));
      if (r.contains("equals"))
        for (const auto& [k, v] : r.at("equals").items()) rule.equals[k] = v.get<std::string>();
      if (r.contains("responses")) {
        for (const auto& x : r.at("responses")) rule.replies.push_back(parse_reply(x));
      } else if (r.contains("response")) {
        rule.replies.push_back(parse_reply(r.at("response")));
      } else if (r.contains("error")) {
        rule.replies.push_back(parse_reply(r));
      }
      if (rule.replies.empty()) throw ParseError("script: rule without a response");
      rules_.push_back(std::move(rule));
    }
    if (script.contains("default") && !script.at("default").is_null())
      default_ = parse_reply(script.at("default"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("script: ") + e.what());
  } catch (const boost::regex_error& e) {
    throw ParseError(std::string("script: bad regex: ") + e.what());
  }
}

ScriptedResponder ScriptedResponder::from_file(const std::filesystem::path& path) {
  try {
    return ScriptedResponder(nlohmann::json::parse(read_text(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string ScriptedResponder::complete(const ChatRequest& request) {
  const std::string prompt = render_prompt(request);
  auto answer = [&](const Reply& reply, const std::map<std::string, std::string>& caps) {
    if (reply.error == "transport") throw TransportError("scripted transport failure");
    if (reply.error == "protocol") throw ProtocolError(500, "scripted protocol failure");
    return expand_captures(reply.text, caps);
  };

  for (const auto& rule : rules_) {
    if (rule.prompt && *rule.prompt != request.template_id) continue;
    bool ok = true;
    for (const auto& c : rule.contains)
      if (prompt.find(c) == std::string::npos) {
        ok = false;
        break;
      }
    if (!ok) continue;
    for (const auto& [k, v] : rule.equals) {
      auto it = request.bindings.find(k);
      if (it == request.bindings.end() || it->second != v) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    std::map<std::string, std::string> caps;
    auto capture = [&](const std::string& subject, const Pattern& p) {
      boost::smatch m;
      if (!boost::regex_search(subject, m, p.re)) return false;
      for (const auto& name : p.names) caps[name] = m[name].str();
      return true;
    };
    if (rule.prompt_regex && !capture(prompt, *rule.prompt_regex)) continue;
    for (const auto& [k, re] : rule.binding_regex) {
      auto it = request.bindings.find(k);
      if (it == request.bindings.end() || !capture(it->second, re)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    const auto& reply = rule.replies[static_cast<std::size_t>(request.sample_index) % rule.replies.size()];
    return answer(reply, caps);
  }
  if (default_) return answer(*default_, {});
  throw UnmatchedPromptError("unmatched prompt for " + prompt_name(request.template_id));
}

}  // namespace autoprov::llm
