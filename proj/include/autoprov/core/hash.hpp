#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace autoprov {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

constexpr std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::string hex64(std::uint64_t v);

// Content digest used by run manifests and rule ids (FNV-1a 64, hex).
std::string digest_text(std::string_view bytes);
std::string digest_file(const std::filesystem::path& path);

}  // namespace autoprov
