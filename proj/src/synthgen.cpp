#include "rap/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rap/camera_io.hpp"
#include "rap/image_io.hpp"
#include "rap/knn.hpp"
#include "rap/ply_io.hpp"
#include "rap/renderer.hpp"
#include "rap/rng.hpp"
#include "rap/sh.hpp"

namespace rap {

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

// Procedural surface and texture.
double surface_height(double x, double y) { return 0.12 * std::sin(2.3 * x) * std::cos(1.9 * y); }

Vec3d texture_color(double x, double y) {
    return {0.5 + 0.35 * std::sin(3.1 * x + 1.7 * y),
            0.5 + 0.35 * std::sin(2.2 * x - 2.9 * y + 1.3),
            0.5 + 0.35 * std::cos(1.9 * x + 2.4 * y)};
}

void random_quat(Rng& rng, float* q) {
    double n2;
    double v[4];
    do {
        for (double& c : v) c = rng.normal();
        n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3];
    } while (n2 < 1e-12);
    double inv = 1.0 / std::sqrt(n2);
    for (int k = 0; k < 4; ++k) q[k] = static_cast<float>(v[k] * inv);
}

struct Builder {
    SplatScene scene;
    std::vector<SynthLabel> labels;
    std::size_t cursor = 0;

    void set(std::size_t i, const Vec3d& p, const Vec3d& color, double opacity, const double s_raw[3],
             Rng& rng, SynthLabel label) {
        scene.positions[3 * i] = static_cast<float>(p.x);
        scene.positions[3 * i + 1] = static_cast<float>(p.y);
        scene.positions[3 * i + 2] = static_cast<float>(p.z);
        scene.sh_dc[3 * i] = static_cast<float>((color.x - 0.5) / kShC0);
        scene.sh_dc[3 * i + 1] = static_cast<float>((color.y - 0.5) / kShC0);
        scene.sh_dc[3 * i + 2] = static_cast<float>((color.z - 0.5) / kShC0);
        scene.opacity_raw[i] = static_cast<float>(logit(opacity));
        for (int k = 0; k < 3; ++k) scene.scale_raw[3 * i + k] = static_cast<float>(s_raw[k]);
        random_quat(rng, &scene.rotation[4 * i]);
        labels[i] = label;
    }
};

CameraView ring_camera(double angle, double radius, double height, int size) {
    CameraView v;
    v.width = v.height = size;
    double fov = 55.0 * 3.14159265358979323846 / 180.0;
    v.fx = v.fy = 0.5 * size / std::tan(fov / 2.0);
    v.cx = size / 2.0;
    v.cy = size / 2.0;

    Vec3d eye{radius * std::cos(angle), radius * std::sin(angle), height};
    Vec3d forward = normalized(eye * -1.0);  // look at the origin
    Vec3d up{0, 0, 1};
    Vec3d right = normalized(cross(forward, up));
    Vec3d down = cross(forward, right);

    const Vec3d rows[3] = {right, down, forward};
    for (int r = 0; r < 3; ++r) {
        v.world_to_camera[static_cast<std::size_t>(r) * 4 + 0] = rows[r].x;
        v.world_to_camera[static_cast<std::size_t>(r) * 4 + 1] = rows[r].y;
        v.world_to_camera[static_cast<std::size_t>(r) * 4 + 2] = rows[r].z;
        v.world_to_camera[static_cast<std::size_t>(r) * 4 + 3] = -dot(rows[r], eye);
    }
    v.world_to_camera[15] = 1.0;
    return v;
}

}  // namespace

SynthScene generate_synth(const SynthSpec& spec) {
    if (spec.total() < 1) throw invalid_argument("synth spec: need at least one primitive");
    if (spec.cameras < 1) throw invalid_argument("synth spec: need at least one camera");
    if (spec.informative < 0 || spec.clones < 0 || spec.floaters < 0 || spec.ghosts < 0 || spec.zero_sh < 0)
        throw invalid_argument("synth spec: negative counts");
    if (spec.clones > 0 && spec.informative == 0)
        throw invalid_argument("synth spec: clones require informative primitives");

    Rng rng(spec.seed, RngStream::synthgen);
    std::size_t total = static_cast<std::size_t>(spec.total());

    Builder b;
    b.scene.resize(total);
    b.labels.assign(total, SynthLabel::informative);

    // Informative primitives on a jittered grid over [-1,1]^2.
    int side = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(
                                std::max(spec.informative, 1))))));
    double spacing = 2.0 / std::max(1, side);
    std::size_t idx = 0;
    for (int g = 0; g < spec.informative; ++g, ++idx) {
        int gx = g % side, gy = g / side;
        double x = -1.0 + (gx + 0.5) * spacing + rng.uniform(-0.25, 0.25) * spacing;
        double y = -1.0 + (gy + 0.5) * spacing + rng.uniform(-0.25, 0.25) * spacing;
        Vec3d p{x, y, surface_height(x, y)};
        Vec3d c = texture_color(x, y);
        double s_raw[3];
        for (double& s : s_raw) s = std::log(spacing * rng.uniform(0.5, 0.9));
        b.set(idx, p, c, rng.uniform(0.75, 0.97), s_raw, rng, SynthLabel::informative);
        // Mild view dependence so anisotropy is informative, not degenerate.
        for (int k = 0; k < 45; ++k)
            b.scene.sh_rest[45 * idx + static_cast<std::size_t>(k)] = static_cast<float>(0.05 * rng.normal());
    }

    // Clones: duplicates with position jitter and inconsistent color.
    for (int g = 0; g < spec.clones; ++g, ++idx) {
        std::size_t src = static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(
            std::max(spec.informative, 1))));
        for (int k = 0; k < 3; ++k) {
            b.scene.positions[3 * idx + static_cast<std::size_t>(k)] =
                b.scene.positions[3 * src + static_cast<std::size_t>(k)] +
                static_cast<float>(0.2 * spacing * rng.normal());
            b.scene.sh_dc[3 * idx + static_cast<std::size_t>(k)] =
                b.scene.sh_dc[3 * src + static_cast<std::size_t>(k)] + static_cast<float>(0.35 * rng.normal() / kShC0);
            b.scene.scale_raw[3 * idx + static_cast<std::size_t>(k)] =
                b.scene.scale_raw[3 * src + static_cast<std::size_t>(k)] +
                static_cast<float>(std::log(rng.uniform(0.5, 0.85)));
        }
        for (int k = 0; k < 45; ++k)
            b.scene.sh_rest[45 * idx + static_cast<std::size_t>(k)] =
                b.scene.sh_rest[45 * src + static_cast<std::size_t>(k)];
        b.scene.opacity_raw[idx] = static_cast<float>(logit(rng.uniform(0.4, 0.9)));
        random_quat(rng, &b.scene.rotation[4 * idx]);
        b.labels[idx] = SynthLabel::clone;
    }

    // Floaters: isolated points well above the surface, mutually separated.
    std::vector<Vec3d> placed;
    for (int g = 0; g < spec.floaters; ++g, ++idx) {
        Vec3d p;
        bool ok = false;
        for (int attempt = 0; attempt < 4000 && !ok; ++attempt) {
            p = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(0.75, 2.4)};
            ok = true;
            for (const Vec3d& q : placed)
                if (norm(p - q) < 0.65) {
                    ok = false;
                    break;
                }
        }
        if (!ok) throw numeric_error("synth: failed to place isolated floaters");
        placed.push_back(p);
        Vec3d c{rng.uniform(0.2, 0.9), rng.uniform(0.2, 0.9), rng.uniform(0.2, 0.9)};
        double s_raw[3];
        for (double& s : s_raw) s = std::log(spacing * rng.uniform(0.8, 1.6));
        b.set(idx, p, c, rng.uniform(0.3, 0.8), s_raw, rng, SynthLabel::floater);
        for (int k = 0; k < 45; ++k)
            b.scene.sh_rest[45 * idx + static_cast<std::size_t>(k)] = static_cast<float>(0.05 * rng.normal());
    }

    // Ghosts: on-surface primitives with near-zero opacity.
    for (int g = 0; g < spec.ghosts; ++g, ++idx) {
        double x = rng.uniform(-1.0, 1.0), y = rng.uniform(-1.0, 1.0);
        Vec3d p{x, y, surface_height(x, y) + 0.02 * rng.normal()};
        Vec3d c = texture_color(x, y);
        double s_raw[3];
        for (double& s : s_raw) s = std::log(spacing * rng.uniform(0.5, 0.9));
        b.set(idx, p, c, rng.uniform(0.004, 0.015), s_raw, rng, SynthLabel::ghost);
        for (int k = 0; k < 45; ++k)
            b.scene.sh_rest[45 * idx + static_cast<std::size_t>(k)] = static_cast<float>(0.05 * rng.normal());
    }

    // Zero-SH blobs: no view dependence, DC color pushed off the texture.
    for (int g = 0; g < spec.zero_sh; ++g, ++idx) {
        double x = rng.uniform(-1.0, 1.0), y = rng.uniform(-1.0, 1.0);
        Vec3d p{x, y, surface_height(x, y) + 0.02 * rng.normal()};
        Vec3d c = texture_color(x, y);
        for (double* ch : {&c.x, &c.y, &c.z}) {
            double off = rng.uniform(0.5, 1.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
            *ch = *ch + off;
        }
        double s_raw[3];
        for (double& s : s_raw) s = std::log(spacing * rng.uniform(0.5, 0.9));
        b.set(idx, p, c, rng.uniform(0.4, 0.9), s_raw, rng, SynthLabel::zero_sh);
        // sh_rest stays exactly zero.
    }

    validate_scene(b.scene, "synth scene");

    SynthScene out;
    out.scene = std::move(b.scene);
    out.labels = std::move(b.labels);

    // Cameras on a ring, ground truth rendered from the informative subset.
    std::vector<bool> informative_mask(total, false);
    for (std::size_t i = 0; i < total; ++i)
        informative_mask[i] = out.labels[i] == SynthLabel::informative;
    SplatScene gt_scene = select(out.scene, informative_mask);

    for (int cam = 0; cam < spec.cameras; ++cam) {
        double angle = 2.0 * 3.14159265358979323846 * cam / spec.cameras;
        CameraView v = ring_camera(angle, spec.ring_radius, spec.ring_height, spec.image_size);
        char name[64];
        std::snprintf(name, sizeof(name), "images/view_%03d.png", cam);
        v.image_name = name;
        if (gt_scene.count > 0) {
            v.gt = render(v, gt_scene).image;
        } else {
            v.gt.height = v.height;
            v.gt.width = v.width;
            v.gt.data.assign(static_cast<std::size_t>(v.height) * v.width * 3, 0.0);
        }
        out.views.push_back(std::move(v));
    }

    // Construction guarantees.
    for (std::size_t i = 0; i < total; ++i) {
        if (out.labels[i] == SynthLabel::ghost &&
            sigmoid_activation(out.scene.opacity_raw[i]) >= 0.02f)
            throw numeric_error("synth: ghost opacity guarantee violated");
    }
    if (spec.floaters > 0 && spec.informative >= 8 && total >= 8) {
        NeighborTable table = build_knn(out.scene.positions, total, kSynthCheckK);
        std::vector<double> avg = avg_knn_distance(table);
        std::vector<double> inf_avg;
        for (std::size_t i = 0; i < total; ++i)
            if (out.labels[i] == SynthLabel::informative) inf_avg.push_back(avg[i]);
        std::sort(inf_avg.begin(), inf_avg.end());
        double median = inf_avg[inf_avg.size() / 2];
        for (std::size_t i = 0; i < total; ++i) {
            if (out.labels[i] == SynthLabel::floater && avg[i] < 5.0 * median)
                throw numeric_error("synth: floater isolation guarantee violated at primitive " +
                                    std::to_string(i));
        }
    }
    return out;
}

void write_synth(const SynthScene& synth, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "images", ec);
    if (ec) throw io_error("cannot create output directory: " + dir);

    save_ply(synth.scene, (fs::path(dir) / "scene.ply").string());
    save_cameras(synth.views, (fs::path(dir) / "cameras.json").string());
    for (const CameraView& v : synth.views) {
        fs::path png = fs::path(dir) / v.image_name;
        save_png(v.gt, png.string());
        fs::path rapi = png;
        rapi.replace_extension(".rapi");
        save_rapi(v.gt, rapi.string());
    }
    {
        std::ofstream f(fs::path(dir) / "labels.csv", std::ios::trunc);
        if (!f) throw io_error("cannot write labels.csv");
        f << "index,label\n";
        for (std::size_t i = 0; i < synth.labels.size(); ++i)
            f << i << "," << kLabelNames[static_cast<int>(synth.labels[i])] << "\n";
    }
    {
        std::ofstream f(fs::path(dir) / "manifest.txt", std::ios::trunc);
        if (!f) throw io_error("cannot write manifest.txt");
        f << (fs::path(dir) / "scene.ply").string() << " " << (fs::path(dir) / "cameras.json").string()
          << " " << dir << "\n";
    }
}

}  // namespace rap
