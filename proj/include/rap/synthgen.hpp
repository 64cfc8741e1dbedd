#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rap/splat_scene.hpp"

namespace rap {

// Desk-scale synthetic scene: informative primitives tile a textured, gently
// curved surface; four planted abnormality classes are ground-truth redundant
// because the reference images are rendered from the informative subset only.
struct SynthSpec {
    int informative = 300;
    int clones = 120;     // near-duplicates with position/color jitter
    int floaters = 60;    // isolated outliers far from the surface
    int ghosts = 60;      // activated opacity < 0.02
    int zero_sh = 60;     // sh_rest exactly zero, offset DC color
    int cameras = 12;
    double ring_radius = 2.6;
    double ring_height = 1.6;
    int image_size = 96;
    std::uint64_t seed = 0;

    int total() const { return informative + clones + floaters + ghosts + zero_sh; }
};

inline constexpr const char* kLabelNames[5] = {"informative", "clone", "floater", "ghost", "zero_sh"};

enum class SynthLabel : int { informative = 0, clone = 1, floater = 2, ghost = 3, zero_sh = 4 };

struct SynthScene {
    SplatScene scene;
    std::vector<CameraView> views;   // gt images attached (informative-only renders)
    std::vector<SynthLabel> labels;  // per primitive
};

// KNN count used for the construction guarantees below.
inline constexpr int kSynthCheckK = 4;

// Deterministic per seed. Throws numeric_error if the planted-property
// guarantees fail (ghost opacity < 0.02, floater isolation >= 5x the
// informative median avg-KNN distance at K = kSynthCheckK).
SynthScene generate_synth(const SynthSpec& spec);

// Writes scene.ply, cameras.json, images/view_###.png (+ .rapi float copies),
// labels.csv, and a single-line manifest.txt into dir.
void write_synth(const SynthScene& synth, const std::string& dir);

}  // namespace rap
