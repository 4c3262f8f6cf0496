#include "autoprov/enrich/normalize.hpp"

#include <cctype>

#include "autoprov/core/error.hpp"
#include "autoprov/core/text.hpp"

namespace autoprov::enrich {
namespace {

bool is_sep(char c) { return c == '/' || c == '\\'; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

// Deletes every maximal run of [0-9.] that contains at least one digit.
std::string strip_versions(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_digit(s[i]) || s[i] == '.') {
      std::size_t j = i;
      bool digit = false;
      while (j < s.size() && (is_digit(s[j]) || s[j] == '.')) digit |= is_digit(s[j++]);
      if (!digit) out.append(s.substr(i, j - i));
      i = j;
    } else {
      out += s[i++];
    }
  }
  return out;
}

std::string strip_final(std::string_view comp) {
  auto dot = comp.rfind('.');
  if (dot == std::string_view::npos) return strip_versions(comp);
  auto base = strip_versions(comp.substr(0, dot));
  return base + std::string(comp.substr(dot));
}

std::size_t scheme_length(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return 0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    char c = s[i];
    if (c == ':') return s.substr(i, 3) == "://" ? i + 3 : 0;
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') return 0;
  }
  return 0;
}

}  // namespace

bool is_endpoint(std::string_view s) {
  if (text::is_ip_port(s)) return true;
  return text::is_ip_port(std::string(s) + ":0");
}

Normalized normalize_entity_name_ex(std::string_view name) {
  if (name.empty()) throw Error("normalize_entity_name: empty name");
  const auto scheme = scheme_length(name);
  const std::string prefix(name.substr(0, scheme));
  const auto rest = name.substr(scheme);

  // Components, each with the first separator of the run before it.
  std::string root;
  std::vector<std::pair<char, std::string>> comps;
  std::size_t i = 0;
  char sep = '\0';
  while (i < rest.size()) {
    if (is_sep(rest[i])) {
      if (i == 0) root = std::string(1, rest[0]);
      sep = rest[i];
      while (i < rest.size() && is_sep(rest[i])) ++i;
      continue;
    }
    std::size_t j = i;
    while (j < rest.size() && !is_sep(rest[j])) ++j;
    comps.emplace_back(comps.empty() ? '\0' : sep, std::string(rest.substr(i, j - i)));
    i = j;
  }

  std::string out = prefix + root;
  bool first = true;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    auto t = k + 1 == comps.size() ? strip_final(comps[k].second) : strip_versions(comps[k].second);
    if (t.empty()) continue;
    if (!first) out += comps[k].first;
    out += t;
    first = false;
  }
  if (first) return {std::string(name), true};
  return {out, false};
}

std::string normalize_entity_name(std::string_view name) { return normalize_entity_name_ex(name).name; }

}  // namespace autoprov::enrich
