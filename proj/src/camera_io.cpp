#include "rap/camera_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rap/image_io.hpp"

namespace rap {

namespace fs = std::filesystem;

std::vector<CameraView> load_cameras(const std::string& json_path, const std::string& image_dir,
                                     bool load_images) {
    std::ifstream f(json_path);
    if (!f) throw io_error("cannot open file: " + json_path);
    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw format_error(json_path + ": invalid JSON: " + e.what());
    }
    if (!doc.is_array()) throw format_error(json_path + ": expected a JSON array of cameras");

    fs::path base = image_dir.empty() ? fs::path(json_path).parent_path() : fs::path(image_dir);

    std::vector<CameraView> views;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& jc = doc[i];
        CameraView v;
        try {
            v.width = jc.at("width").get<int>();
            v.height = jc.at("height").get<int>();
            v.fx = jc.at("fx").get<double>();
            v.fy = jc.at("fy").get<double>();
            v.cx = jc.at("cx").get<double>();
            v.cy = jc.at("cy").get<double>();
            const auto& m = jc.at("world_to_camera");
            if (!m.is_array() || m.size() != 16)
                throw format_error(json_path + ": camera " + std::to_string(i) +
                                   ": world_to_camera must hold 16 values");
            for (std::size_t k = 0; k < 16; ++k) v.world_to_camera[k] = m[k].get<double>();
            v.image_name = jc.value("image", "");
        } catch (const nlohmann::json::exception& e) {
            throw format_error(json_path + ": camera " + std::to_string(i) + ": " + e.what());
        }
        validate_view(v, json_path + ": camera " + std::to_string(i));
        if (load_images) {
            if (v.image_name.empty())
                throw format_error(json_path + ": camera " + std::to_string(i) + " has no image filename");
            fs::path img = fs::path(v.image_name);
            if (img.is_relative()) img = base / img;
            v.gt = load_image(img.string());
            if (v.gt.height != v.height || v.gt.width != v.width)
                throw format_error(json_path + ": camera " + std::to_string(i) + ": image " + img.string() +
                                   " is " + std::to_string(v.gt.height) + "x" + std::to_string(v.gt.width) +
                                   ", camera declares " + std::to_string(v.height) + "x" +
                                   std::to_string(v.width));
        }
        views.push_back(std::move(v));
    }
    return views;
}

void save_cameras(const std::vector<CameraView>& views, const std::string& json_path) {
    nlohmann::json doc = nlohmann::json::array();
    for (const CameraView& v : views) {
        nlohmann::json jc;
        jc["width"] = v.width;
        jc["height"] = v.height;
        jc["fx"] = v.fx;
        jc["fy"] = v.fy;
        jc["cx"] = v.cx;
        jc["cy"] = v.cy;
        jc["world_to_camera"] = v.world_to_camera;
        jc["image"] = v.image_name;
        doc.push_back(std::move(jc));
    }
    std::ofstream f(json_path, std::ios::trunc);
    if (!f) throw io_error("cannot open for writing: " + json_path);
    f << doc.dump(2) << "\n";
    if (!f) throw io_error("write failed: " + json_path);
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open file: " + path);
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::string trimmed = line;
        auto first = trimmed.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (trimmed[first] == '#') continue;
        std::istringstream ls(trimmed);
        ManifestEntry e;
        if (!(ls >> e.ply_path >> e.cameras_path >> e.image_dir))
            throw format_error(path + ":" + std::to_string(lineno) +
                               ": expected '<ply> <cameras json> <image dir>'");
        entries.push_back(std::move(e));
    }
    if (entries.empty()) throw format_error(path + ": manifest lists no scenes");
    return entries;
}

}  // namespace rap
