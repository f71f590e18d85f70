#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ecogrow {

inline constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= kFnvPrime;
  }
  return h;
}

std::string to_hex(std::uint64_t value);

// FNV-1a of a file's bytes; throws PipelineError if the file cannot be read.
std::uint64_t fnv1a64_file(const std::string& path);

}  // namespace ecogrow
