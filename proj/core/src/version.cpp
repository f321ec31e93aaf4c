#include "acsm/version.hpp"

#include <cstdio>

namespace acsm {

const char* code_version() { return "acsm 0.1.0"; }

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const unsigned char* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string digest_hex(const std::string& canonical_text) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(
                    fnv1a64(canonical_text.data(), canonical_text.size())));
  return std::string(buf);
}

}  // namespace acsm
