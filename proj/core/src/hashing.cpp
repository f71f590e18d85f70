#include "ecogrow/hashing.hpp"

#include <fstream>
#include <sstream>

#include "ecogrow/errors.hpp"

namespace ecogrow {

std::string to_hex(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xF];
    value >>= 4;
  }
  return out;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PipelineError("cannot read file for checksum: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a64(buf.str());
}

}  // namespace ecogrow
