#include "rap/mlp.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rap/parallel.hpp"
#include "rap/rng.hpp"

namespace rap {

MlpWeights mlp_init(std::uint64_t seed) {
    Rng rng(seed, RngStream::mlp_init);
    MlpWeights w;
    w.layers.resize(kMlpLayerCount);
    for (int l = 0; l < kMlpLayerCount; ++l) {
        auto& layer = w.layers[static_cast<std::size_t>(l)];
        layer.in = kMlpDims[l];
        layer.out = kMlpDims[l + 1];
        layer.w.resize(static_cast<std::size_t>(layer.in) * layer.out);
        layer.b.assign(static_cast<std::size_t>(layer.out), 0.0f);
        double bound = std::sqrt(6.0 / (layer.in + layer.out));
        for (auto& v : layer.w) v = static_cast<float>(rng.uniform(-bound, bound));
    }
    return w;
}

void mlp_validate(const MlpWeights& w) {
    if (w.layers.size() != kMlpLayerCount)
        throw format_error("mlp: expected " + std::to_string(kMlpLayerCount) + " layers, got " +
                           std::to_string(w.layers.size()));
    for (int l = 0; l < kMlpLayerCount; ++l) {
        const auto& layer = w.layers[static_cast<std::size_t>(l)];
        if (layer.in != kMlpDims[l] || layer.out != kMlpDims[l + 1])
            throw format_error("mlp: layer " + std::to_string(l) + " has shape " + std::to_string(layer.out) +
                               "x" + std::to_string(layer.in) + ", expected " + std::to_string(kMlpDims[l + 1]) +
                               "x" + std::to_string(kMlpDims[l]));
        if (layer.w.size() != static_cast<std::size_t>(layer.in) * layer.out ||
            layer.b.size() != static_cast<std::size_t>(layer.out))
            throw format_error("mlp: layer " + std::to_string(l) + " has wrong coefficient count");
        for (float v : layer.w)
            if (!std::isfinite(v)) throw numeric_error("mlp: non-finite weight");
        for (float v : layer.b)
            if (!std::isfinite(v)) throw numeric_error("mlp: non-finite bias");
    }
}

std::vector<float> mlp_forward(const FeatureMatrix& features, const MlpWeights& w, MlpForwardCache* cache) {
    mlp_validate(w);
    std::size_t rows = features.n;
    MlpForwardCache local;
    MlpForwardCache& cc = cache ? *cache : local;
    cc.rows = rows;
    cc.act.assign(kMlpLayerCount + 1, {});
    cc.act[0] = features.data;
    for (int l = 0; l < kMlpLayerCount; ++l)
        cc.act[static_cast<std::size_t>(l) + 1].resize(rows * static_cast<std::size_t>(kMlpDims[l + 1]));

    parallel_for(rows, [&](std::size_t rb, std::size_t re) {
        for (std::size_t r = rb; r < re; ++r) {
            for (int l = 0; l < kMlpLayerCount; ++l) {
                const auto& layer = w.layers[static_cast<std::size_t>(l)];
                const float* x = &cc.act[static_cast<std::size_t>(l)][r * static_cast<std::size_t>(layer.in)];
                float* y = &cc.act[static_cast<std::size_t>(l) + 1][r * static_cast<std::size_t>(layer.out)];
                for (int o = 0; o < layer.out; ++o) {
                    float z = layer.b[static_cast<std::size_t>(o)];
                    const float* wr = &layer.w[static_cast<std::size_t>(o) * layer.in];
                    for (int i = 0; i < layer.in; ++i) z += wr[i] * x[i];
                    if (l == kMlpLayerCount - 1) {
                        y[o] = sigmoid_activation(z);
                    } else {
                        y[o] = z > 0.0f ? z : 0.0f;
                    }
                }
            }
        }
    });
    return cc.act.back();
}

MlpGrads mlp_backward(const MlpWeights& w, const MlpForwardCache& cache,
                      const std::vector<double>& dloss_dscore) {
    if (dloss_dscore.size() != cache.rows) throw invalid_argument("mlp_backward: gradient length mismatch");

    MlpGrads grads;
    grads.layers.resize(kMlpLayerCount);
    for (int l = 0; l < kMlpLayerCount; ++l) {
        grads.layers[static_cast<std::size_t>(l)].w.assign(w.layers[static_cast<std::size_t>(l)].w.size(), 0.0);
        grads.layers[static_cast<std::size_t>(l)].b.assign(w.layers[static_cast<std::size_t>(l)].b.size(), 0.0);
    }
    if (cache.rows == 0) return grads;

    // Per-chunk accumulators combined in chunk order (thread-count invariant).
    std::size_t chunks = reduce_chunk_count(cache.rows);
    std::vector<MlpGrads> partial(chunks);
    for (auto& p : partial) {
        p.layers.resize(kMlpLayerCount);
        for (int l = 0; l < kMlpLayerCount; ++l) {
            p.layers[static_cast<std::size_t>(l)].w.assign(w.layers[static_cast<std::size_t>(l)].w.size(), 0.0);
            p.layers[static_cast<std::size_t>(l)].b.assign(w.layers[static_cast<std::size_t>(l)].b.size(), 0.0);
        }
    }

    chunked_reduce(
        cache.rows,
        [&](std::size_t c, std::size_t lo, std::size_t hi) {
            MlpGrads& g = partial[c];
            std::vector<double> delta, delta_prev;
            for (std::size_t r = lo; r < hi; ++r) {
                // Output layer: dL/dz = dL/dS * S * (1 - S).
                double s = cache.act.back()[r];
                delta.assign(1, dloss_dscore[r] * s * (1.0 - s));
                for (int l = kMlpLayerCount - 1; l >= 0; --l) {
                    const auto& layer = w.layers[static_cast<std::size_t>(l)];
                    const float* x = &cache.act[static_cast<std::size_t>(l)][r * static_cast<std::size_t>(layer.in)];
                    auto& gl = g.layers[static_cast<std::size_t>(l)];
                    for (int o = 0; o < layer.out; ++o) {
                        double d = delta[static_cast<std::size_t>(o)];
                        gl.b[static_cast<std::size_t>(o)] += d;
                        double* gw = &gl.w[static_cast<std::size_t>(o) * layer.in];
                        for (int i = 0; i < layer.in; ++i) gw[i] += d * x[i];
                    }
                    if (l == 0) break;
                    delta_prev.assign(static_cast<std::size_t>(layer.in), 0.0);
                    for (int o = 0; o < layer.out; ++o) {
                        double d = delta[static_cast<std::size_t>(o)];
                        const float* wr = &layer.w[static_cast<std::size_t>(o) * layer.in];
                        for (int i = 0; i < layer.in; ++i) delta_prev[static_cast<std::size_t>(i)] += d * wr[i];
                    }
                    // ReLU mask from the cached post-activations.
                    for (int i = 0; i < layer.in; ++i)
                        if (x[i] <= 0.0f) delta_prev[static_cast<std::size_t>(i)] = 0.0;
                    delta.swap(delta_prev);
                }
            }
        },
        [&](std::size_t c) {
            for (int l = 0; l < kMlpLayerCount; ++l) {
                auto& dst = grads.layers[static_cast<std::size_t>(l)];
                const auto& src = partial[c].layers[static_cast<std::size_t>(l)];
                for (std::size_t i = 0; i < dst.w.size(); ++i) dst.w[i] += src.w[i];
                for (std::size_t i = 0; i < dst.b.size(); ++i) dst.b[i] += src.b[i];
            }
        });
    return grads;
}

AdamState adam_init(const MlpWeights& w) {
    AdamState s;
    s.layers.resize(w.layers.size());
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        s.layers[l].mw.assign(w.layers[l].w.size(), 0.0);
        s.layers[l].vw.assign(w.layers[l].w.size(), 0.0);
        s.layers[l].mb.assign(w.layers[l].b.size(), 0.0);
        s.layers[l].vb.assign(w.layers[l].b.size(), 0.0);
    }
    return s;
}

void adam_step(MlpWeights& w, const MlpGrads& grads, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
    if (grads.layers.size() != w.layers.size() || state.layers.size() != w.layers.size())
        throw invalid_argument("adam_step: shape mismatch");
    state.step += 1;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    auto update = [&](std::vector<float>& param, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            param[i] = static_cast<float>(static_cast<double>(param[i]) - lr * mhat / (std::sqrt(vhat) + eps));
        }
    };
    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        update(w.layers[l].w, grads.layers[l].w, state.layers[l].mw, state.layers[l].vw);
        update(w.layers[l].b, grads.layers[l].b, state.layers[l].mb, state.layers[l].vb);
    }
}

std::string weights_to_json(const MlpWeights& w) {
    nlohmann::json doc;
    doc["format"] = "rap-mlp";
    doc["version"] = 1;
    doc["hidden_activation"] = "relu";
    doc["layers"] = nlohmann::json::array();
    for (const auto& layer : w.layers) {
        nlohmann::json jl;
        jl["in"] = layer.in;
        jl["out"] = layer.out;
        // Floats are widened to double (exact) so the shortest-round-trip
        // decimal emitted by the serializer restores identical bits.
        nlohmann::json jw = nlohmann::json::array();
        for (float v : layer.w) jw.push_back(static_cast<double>(v));
        nlohmann::json jb = nlohmann::json::array();
        for (float v : layer.b) jb.push_back(static_cast<double>(v));
        jl["weight"] = std::move(jw);
        jl["bias"] = std::move(jb);
        doc["layers"].push_back(std::move(jl));
    }
    return doc.dump(2);
}

MlpWeights weights_from_json(const std::string& text, const std::string& context) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw format_error(context + ": invalid JSON: " + e.what());
    }
    if (!doc.contains("layers") || !doc["layers"].is_array())
        throw format_error(context + ": missing layers array");
    MlpWeights w;
    for (const auto& jl : doc["layers"]) {
        MlpWeights::Layer layer;
        layer.in = jl.value("in", 0);
        layer.out = jl.value("out", 0);
        for (const auto& v : jl.at("weight")) layer.w.push_back(static_cast<float>(v.get<double>()));
        for (const auto& v : jl.at("bias")) layer.b.push_back(static_cast<float>(v.get<double>()));
        w.layers.push_back(std::move(layer));
    }
    try {
        mlp_validate(w);
    } catch (const numeric_error&) {
        throw format_error(context + ": non-finite coefficients");
    }
    return w;
}

void save_weights(const MlpWeights& w, const std::string& path) {
    mlp_validate(w);
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw io_error("cannot open for writing: " + path);
    f << weights_to_json(w) << "\n";
    if (!f) throw io_error("write failed: " + path);
}

MlpWeights load_weights(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open file: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return weights_from_json(text, path);
}

}  // namespace rap
