#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "autoprov/core/error.hpp"
#include "json.hpp"

namespace autoprov {

// Writes `content` to a sibling temp file and renames it over `path`, so a
// reader never observes a partially written artifact.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_text(const std::filesystem::path& path);

std::string to_jsonl_line(const nlohmann::json& j);

template <class T>
std::size_t write_jsonl(const std::filesystem::path& path, const std::vector<T>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_jsonl_line(nlohmann::json(r));
    out += '\n';
  }
  write_text_atomic(path, out);
  return records.size();
}

// Parses one JSON value per non-blank line. Errors name the 1-based line.
std::vector<nlohmann::json> read_jsonl_values(const std::filesystem::path& path);

template <class T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
  std::vector<T> out;
  std::size_t line = 0;
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::string buf;
  while (std::getline(in, buf)) {
    ++line;
    if (buf.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(buf).get<T>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line);
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ": " + e.what(), line);
    }
  }
  return out;
}

}  // namespace autoprov
