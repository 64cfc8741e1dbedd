#include "rap/ply_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

static_assert(std::endian::native == std::endian::little, "little-endian host required");

namespace rap {

namespace {

// Canonical property order of the standard splat export.
std::vector<std::string> canonical_properties() {
    std::vector<std::string> props = {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
    for (int i = 0; i < 45; ++i) props.push_back("f_rest_" + std::to_string(i));
    props.push_back("opacity");
    for (int i = 0; i < 3; ++i) props.push_back("scale_" + std::to_string(i));
    for (int i = 0; i < 4; ++i) props.push_back("rot_" + std::to_string(i));
    return props;
}

std::vector<std::uint8_t> read_file_maybe_gzip(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open file: " + path);
    std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (raw.size() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b) {
        // gzip stream; inflate fully
        z_stream zs{};
        if (inflateInit2(&zs, 15 + 16) != Z_OK) throw io_error("zlib init failed");
        zs.next_in = raw.data();
        zs.avail_in = static_cast<uInt>(raw.size());
        std::vector<std::uint8_t> out;
        std::vector<std::uint8_t> chunk(1 << 16);
        int rc;
        do {
            zs.next_out = chunk.data();
            zs.avail_out = static_cast<uInt>(chunk.size());
            rc = inflate(&zs, Z_NO_FLUSH);
            if (rc != Z_OK && rc != Z_STREAM_END) {
                inflateEnd(&zs);
                throw format_error("corrupt gzip stream: " + path);
            }
            out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
        } while (rc != Z_STREAM_END);
        inflateEnd(&zs);
        return out;
    }
    return raw;
}

}  // namespace

SplatScene parse_ply(const std::vector<std::uint8_t>& bytes, const std::string& context) {
    // Header is ASCII lines terminated by '\n' up to and including "end_header".
    std::size_t header_end = 0;
    {
        static const std::string tag = "end_header\n";
        std::string_view sv(reinterpret_cast<const char*>(bytes.data()), std::min<std::size_t>(bytes.size(), 65536));
        std::size_t pos = sv.find(tag);
        if (pos == std::string_view::npos) throw format_error(context + ": missing end_header");
        header_end = pos + tag.size();
    }
    std::istringstream header(std::string(reinterpret_cast<const char*>(bytes.data()), header_end));
    std::string line;
    std::getline(header, line);
    if (line != "ply" && line != "ply\r") throw format_error(context + ": not a PLY file");

    std::size_t vertex_count = 0;
    bool format_ok = false;
    bool in_vertex_element = false;
    std::vector<std::string> props;
    while (std::getline(header, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "comment" || word.empty()) continue;
        if (word == "format") {
            std::string fmt, ver;
            ls >> fmt >> ver;
            if (fmt != "binary_little_endian")
                throw format_error(context + ": unsupported format '" + fmt + "' (binary_little_endian required)");
            format_ok = true;
        } else if (word == "element") {
            std::string name;
            std::size_t cnt = 0;
            ls >> name >> cnt;
            if (name == "vertex") {
                vertex_count = cnt;
                in_vertex_element = true;
            } else {
                throw format_error(context + ": unsupported element '" + name + "'");
            }
        } else if (word == "property") {
            if (!in_vertex_element) throw format_error(context + ": property before vertex element");
            std::string type, name;
            ls >> type >> name;
            if (type != "float")
                throw format_error(context + ": property " + name + " has type '" + type +
                                   "', only float is supported");
            props.push_back(name);
        } else if (word == "end_header") {
            break;
        } else {
            throw format_error(context + ": unrecognized header line '" + line + "'");
        }
    }
    if (!format_ok) throw format_error(context + ": missing format declaration");

    const std::vector<std::string> wanted = canonical_properties();
    std::unordered_map<std::string, int> offset_of;
    for (std::size_t i = 0; i < props.size(); ++i) {
        if (offset_of.count(props[i])) throw format_error(context + ": duplicate property " + props[i]);
        offset_of[props[i]] = static_cast<int>(i);
    }
    for (const std::string& p : props) {
        bool known = false;
        for (const std::string& w : wanted)
            if (w == p) {
                known = true;
                break;
            }
        if (!known) throw format_error(context + ": unknown property " + p);
    }
    for (const std::string& w : wanted) {
        if (!offset_of.count(w)) throw format_error(context + ": missing property " + w);
    }

    const std::size_t stride = props.size() * 4;
    if (bytes.size() - header_end < vertex_count * stride)
        throw format_error(context + ": vertex data truncated (" +
                           std::to_string(bytes.size() - header_end) + " payload bytes, need " +
                           std::to_string(vertex_count * stride) + ")");

    SplatScene scene;
    scene.resize(vertex_count);
    const std::uint8_t* payload = bytes.data() + header_end;
    auto prop = [&](std::size_t row, const char* name) {
        float v;
        std::memcpy(&v, payload + row * stride + static_cast<std::size_t>(offset_of.at(name)) * 4, 4);
        return v;
    };
    for (std::size_t i = 0; i < vertex_count; ++i) {
        scene.positions[3 * i] = prop(i, "x");
        scene.positions[3 * i + 1] = prop(i, "y");
        scene.positions[3 * i + 2] = prop(i, "z");
        for (int k = 0; k < 3; ++k) scene.sh_dc[3 * i + k] = prop(i, ("f_dc_" + std::to_string(k)).c_str());
        for (int k = 0; k < 45; ++k)
            scene.sh_rest[45 * i + k] = prop(i, ("f_rest_" + std::to_string(k)).c_str());
        scene.opacity_raw[i] = prop(i, "opacity");
        for (int k = 0; k < 3; ++k)
            scene.scale_raw[3 * i + k] = prop(i, ("scale_" + std::to_string(k)).c_str());
        for (int k = 0; k < 4; ++k) scene.rotation[4 * i + k] = prop(i, ("rot_" + std::to_string(k)).c_str());
    }
    validate_scene(scene, context);
    return scene;
}

SplatScene load_ply(const std::string& path) {
    return parse_ply(read_file_maybe_gzip(path), path);
}

std::vector<std::uint8_t> serialize_ply(const SplatScene& scene) {
    validate_scene(scene, "save_ply");
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\nelement vertex " << scene.count << "\n";
    for (const std::string& p : canonical_properties()) header << "property float " << p << "\n";
    header << "end_header\n";
    std::string h = header.str();

    const std::size_t stride = 62 * 4;
    std::vector<std::uint8_t> out(h.size() + scene.count * stride);
    std::memcpy(out.data(), h.data(), h.size());
    std::uint8_t* p = out.data() + h.size();
    auto put = [&](float v) {
        std::memcpy(p, &v, 4);
        p += 4;
    };
    for (std::size_t i = 0; i < scene.count; ++i) {
        for (int k = 0; k < 3; ++k) put(scene.positions[3 * i + k]);
        for (int k = 0; k < 3; ++k) put(0.0f);  // normals
        for (int k = 0; k < 3; ++k) put(scene.sh_dc[3 * i + k]);
        for (int k = 0; k < 45; ++k) put(scene.sh_rest[45 * i + k]);
        put(scene.opacity_raw[i]);
        for (int k = 0; k < 3; ++k) put(scene.scale_raw[3 * i + k]);
        for (int k = 0; k < 4; ++k) put(scene.rotation[4 * i + k]);
    }
    return out;
}

void save_ply(const SplatScene& scene, const std::string& path) {
    std::vector<std::uint8_t> bytes = serialize_ply(scene);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw io_error("write failed: " + path);
}

}  // namespace rap
