#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rap/features.hpp"

namespace rap {

// Fixed scorer topology: 15 -> 32 -> 32 -> 16 -> 1, ReLU hidden units,
// sigmoid output.
inline constexpr int kMlpDims[5] = {15, 32, 32, 16, 1};
inline constexpr int kMlpLayerCount = 4;

struct MlpWeights {
    struct Layer {
        int in = 0, out = 0;
        std::vector<float> w;  // out x in, row-major
        std::vector<float> b;  // out
    };
    std::vector<Layer> layers;

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.w.size() + l.b.size();
        return n;
    }
};

// Glorot-uniform weights, zero biases, deterministic per seed.
MlpWeights mlp_init(std::uint64_t seed);

void mlp_validate(const MlpWeights& w);

// Post-activation values per layer, kept for the backward pass.
struct MlpForwardCache {
    std::size_t rows = 0;
    std::vector<std::vector<float>> act;  // act[0] = input rows, act[l+1] = layer l output
};

// Scores strictly in (0,1), one per feature row. Rows are independent, so the
// batch is order-equivariant.
std::vector<float> mlp_forward(const FeatureMatrix& features, const MlpWeights& w,
                               MlpForwardCache* cache = nullptr);

struct MlpGrads {
    struct Layer {
        std::vector<double> w, b;
    };
    std::vector<Layer> layers;
};

// Reverse-mode gradients of a scalar loss given dL/dS per row (sum over the
// batch, 64-bit accumulation).
MlpGrads mlp_backward(const MlpWeights& w, const MlpForwardCache& cache,
                      const std::vector<double>& dloss_dscore);

struct AdamState {
    struct Layer {
        std::vector<double> mw, vw, mb, vb;
    };
    std::vector<Layer> layers;
    std::int64_t step = 0;
};

AdamState adam_init(const MlpWeights& w);

void adam_step(MlpWeights& w, const MlpGrads& grads, AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// JSON weight files; float values round-trip bit-exactly.
void save_weights(const MlpWeights& w, const std::string& path);
MlpWeights load_weights(const std::string& path);

std::string weights_to_json(const MlpWeights& w);
MlpWeights weights_from_json(const std::string& text, const std::string& context);

}  // namespace rap
