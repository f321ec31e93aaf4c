#pragma once

#include <cstdint>
#include <string>

namespace acsm {

// Version string stamped into every output file.
const char* code_version();

// FNV-1a 64-bit hash, used to fingerprint canonicalized run configurations.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::string digest_hex(const std::string& canonical_text);

}  // namespace acsm
