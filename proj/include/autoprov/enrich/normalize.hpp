#pragma once

#include <string>
#include <string_view>

namespace autoprov::enrich {

struct Normalized {
  std::string name;
  bool fallback = false;  // normalization emptied the name; original kept
};

// Collapses separator runs, deletes version-like digit/dot runs from every
// path component (the final extension is kept verbatim) and strips trailing
// separators. A leading "scheme://" is preserved. Case is preserved.
Normalized normalize_entity_name_ex(std::string_view name);
std::string normalize_entity_name(std::string_view name);

// Bare IPv4 address or IPv4:port.
bool is_endpoint(std::string_view s);

}  // namespace autoprov::enrich
