#pragma once

#include <string>

#include "rap/splat_scene.hpp"

namespace rap {

// 8-bit RGB PNG. Values are clamped to [0,1] and rounded on write; loads map
// bytes to v/255.
void save_png(const Image& img, const std::string& path);
Image load_png(const std::string& path);

// Raw float image: magic "RAPI", height u32, width u32, then H*W*3 float32
// row-major RGB, all little-endian.
void save_rapi(const Image& img, const std::string& path);
Image load_rapi(const std::string& path);

// Dispatch on extension (.png / .rapi).
Image load_image(const std::string& path);

}  // namespace rap
