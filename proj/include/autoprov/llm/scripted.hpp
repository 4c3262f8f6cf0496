#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/regex.hpp>

#include "autoprov/llm/provider.hpp"
#include "json.hpp"

namespace autoprov::llm {

class UnmatchedPromptError : public Error {
 public:
  using Error::Error;
};

// Deterministic chat provider driven by a JSON script:
//
//   {"rules": [{"template": "P4",
//               "contains": ["..."],
//               "regex": "...",                      // over the rendered prompt
//               "binding_regex": {"log": "^...$"},   // over single bindings
//               "equals": {"field": "Sid"},
//               "response": "..." | "responses": ["...", {"error": "transport"}]}],
//    "default": "..."}
//
// The first rule whose conditions all hold answers. With "responses", the
// entry at sample_index % size is used. Named groups from the regexes can be
// spliced into the response as @{name}; "@@" is a literal '@'.
class ScriptedResponder : public ChatProvider {
 public:
  explicit ScriptedResponder(const nlohmann::json& script);
  static ScriptedResponder from_file(const std::filesystem::path& path);

  std::string complete(const ChatRequest& request) override;
  std::string identity() const override { return identity_; }

 private:
  struct Reply {
    std::string text;
    std::string error;  // "", "transport", "protocol"
  };
  struct Pattern {
    boost::regex re;
    std::vector<std::string> names;  // named groups, in pattern order
  };
  struct Rule {
    std::optional<PromptId> prompt;
    std::vector<std::string> contains;
    std::optional<Pattern> prompt_regex;
    std::vector<std::pair<std::string, Pattern>> binding_regex;
    std::map<std::string, std::string> equals;
    std::vector<Reply> replies;
  };

  static Reply parse_reply(const nlohmann::json& j);
  static Pattern compile(const std::string& pattern);

  std::vector<Rule> rules_;
  std::optional<Reply> default_;
  std::string identity_;
};

// Expands @{name} references; unknown names expand to "".
std::string expand_captures(std::string_view response,
                            const std::map<std::string, std::string>& captures);

}  // namespace autoprov::llm
