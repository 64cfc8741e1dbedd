#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace rap {

// Hex digest of a byte buffer (FIPS 180-4 SHA-256). Used for provenance
// sidecars; not performance critical.
std::string sha256_hex(const void* data, std::size_t len);

std::string sha256_file_hex(const std::string& path);

}  // namespace rap
