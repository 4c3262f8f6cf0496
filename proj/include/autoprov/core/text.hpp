#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace autoprov::text {

std::string_view trim(std::string_view s);
std::string casefold(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

// True for "a.b.c.d:port" with a dotted IPv4 address and a decimal port.
bool is_ip_port(std::string_view s);

}  // namespace autoprov::text
