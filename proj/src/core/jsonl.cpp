#include "autoprov/core/jsonl.hpp"

#include <cerrno>
#include <cstring>
#include <sstream>

namespace autoprov {

void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.parent_path().string(), ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp.string(), std::strerror(errno));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError(tmp.string(), "write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(path.string(), "rename failed: " + ec.message());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string to_jsonl_line(const nlohmann::json& j) {
  // Invalid UTF-8 in log text is replaced rather than aborting a whole stage.
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::vector<nlohmann::json> read_jsonl_values(const std::filesystem::path& path) {
  return read_jsonl<nlohmann::json>(path);
}

}  // namespace autoprov
