#pragma once

#include <string>
#include <vector>

#include "rap/splat_scene.hpp"

namespace rap {

// Camera JSON: a list of records with width, height, fx, fy, cx, cy,
// world_to_camera (16 floats row-major) and an image filename. Relative image
// paths resolve against image_dir (empty = the JSON's directory).
std::vector<CameraView> load_cameras(const std::string& json_path, const std::string& image_dir = "",
                                     bool load_images = true);

void save_cameras(const std::vector<CameraView>& views, const std::string& json_path);

// Scene roster manifest: one scene per line,
//   <ply path> <camera json path> <image dir>
// '#' comments and blank lines are skipped.
struct ManifestEntry {
    std::string ply_path;
    std::string cameras_path;
    std::string image_dir;
};

std::vector<ManifestEntry> load_manifest(const std::string& path);

}  // namespace rap
