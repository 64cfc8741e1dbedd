#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rap/splat_scene.hpp"

namespace rap {

// Binary little-endian PLY with the standard splat export layout:
// x y z nx ny nz f_dc_0..2 f_rest_0..44 opacity scale_0..2 rot_0..3,
// every property float32. Normals are accepted and discarded on load and
// written as zeros on save. Gzip-compressed files are detected by magic bytes.
SplatScene load_ply(const std::string& path);

SplatScene parse_ply(const std::vector<std::uint8_t>& bytes, const std::string& context);

void save_ply(const SplatScene& scene, const std::string& path);

// In-memory serialization (canonical property order); used for rate
// measurement and byte-level tests.
std::vector<std::uint8_t> serialize_ply(const SplatScene& scene);

}  // namespace rap
