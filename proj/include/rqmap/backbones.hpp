#pragma once

#include <string>

#include "rqmap/model.hpp"

namespace rqmap {

// Channel widths are tuned so each backbone lands inside the 550k-650k
// trainable-parameter budget at the default configuration.

struct VitConfig {
    int in_channels = 4;
    int image = 64;
    int patch = 8;
    int dim = 128;
    int depth = 3;
    int heads = 4;
    int mlp_ratio = 2;
    int stem_channels = 12;   // full-resolution conv features feeding the skip path
    int dec1 = 40, dec2 = 20, dec3 = 16;  // transposed-conv widths 8->16->32->64
    bool enforce_budget = true;
};

struct CnnConfig {
    int in_channels = 4;
    int image = 64;
    int enc1 = 16, enc2 = 32, enc3 = 64;      // stride-2 stages
    int bott = 128;                            // bottleneck width (three 3x3 convs)
    int dec1 = 52, dec2 = 42, dec3 = 16;       // transposed-conv widths
    bool enforce_budget = true;
};

struct MlpConfig {
    int in_channels = 4;
    int image = 64;
    int hidden = 29;
    bool enforce_budget = true;
};

namespace detail {

inline void check_budget(std::size_t count, const std::string& arch, bool enforce) {
    if (enforce && (count < 550000 || count > 650000))
        throw ConfigError(arch + ": parameter count " + std::to_string(count) +
                          " outside the 550000..650000 budget");
}

}  // namespace detail

template <typename T>
Model<T> build_vit(const VitConfig& cfg, std::uint64_t seed) {
    if (cfg.image % cfg.patch != 0) throw ConfigError("vit: image size not divisible by patch size");
    if (cfg.dim % cfg.heads != 0) throw ConfigError("vit: embed dim not divisible by heads");
    const int grid = cfg.image / cfg.patch;
    Rng rng(stream_seed(seed, "init-vit"));

    Model<T> m;
    m.in_channels = cfg.in_channels;
    m.arch = "vit:k" + std::to_string(cfg.in_channels) + ":i" + std::to_string(cfg.image) + ":p" +
             std::to_string(cfg.patch) + ":d" + std::to_string(cfg.dim) + ":L" +
             std::to_string(cfg.depth) + ":h" + std::to_string(cfg.heads) + ":s" +
             std::to_string(cfg.stem_channels) + ":dec" + std::to_string(cfg.dec1) + "-" +
             std::to_string(cfg.dec2) + "-" + std::to_string(cfg.dec3);

    const int stem = m.add(std::make_unique<Conv2d<T>>(cfg.in_channels, cfg.stem_channels, 3, 1, 1, rng), {-1});
    const int stem_act = m.add(std::make_unique<Gelu<T>>(), {stem});
    int cur = m.add(std::make_unique<PatchEmbed<T>>(cfg.stem_channels, cfg.dim, cfg.patch, grid, rng),
                    {stem_act});
    for (int b = 0; b < cfg.depth; ++b) {
        // pre-norm transformer block
        const int ln1 = m.add(std::make_unique<LayerNorm<T>>(cfg.dim), {cur});
        const int att = m.add(std::make_unique<MultiHeadAttention<T>>(cfg.dim, cfg.heads, rng), {ln1});
        const int res1 = m.add(std::make_unique<Add<T>>(), {att, cur});
        const int ln2 = m.add(std::make_unique<LayerNorm<T>>(cfg.dim), {res1});
        const int fc1 = m.add(std::make_unique<Linear<T>>(cfg.dim, cfg.dim * cfg.mlp_ratio, rng, true), {ln2});
        const int act = m.add(std::make_unique<Gelu<T>>(), {fc1});
        const int fc2 = m.add(std::make_unique<Linear<T>>(cfg.dim * cfg.mlp_ratio, cfg.dim, rng, true), {act});
        cur = m.add(std::make_unique<Add<T>>(), {fc2, res1});
    }
    cur = m.add(std::make_unique<LayerNorm<T>>(cfg.dim), {cur});
    m.encoder_end = cur + 1;

    cur = m.add(std::make_unique<TokensToGrid<T>>(grid, cfg.dim), {cur});
    cur = m.add(std::make_unique<TransposedConv2d<T>>(cfg.dim, cfg.dec1, 4, 2, 1, rng), {cur});
    cur = m.add(std::make_unique<Gelu<T>>(), {cur});
    cur = m.add(std::make_unique<TransposedConv2d<T>>(cfg.dec1, cfg.dec2, 4, 2, 1, rng), {cur});
    cur = m.add(std::make_unique<Gelu<T>>(), {cur});
    cur = m.add(std::make_unique<TransposedConv2d<T>>(cfg.dec2, cfg.dec3, 4, 2, 1, rng), {cur});
    cur = m.add(std::make_unique<Gelu<T>>(), {cur});
    cur = m.add(std::make_unique<ConcatSkip<T>>(), {cur, stem_act});
    cur = m.add(std::make_unique<Conv2d<T>>(cfg.dec3 + cfg.stem_channels, 1, 1, 1, 0, rng), {cur});
    m.skip_taps = {stem_act};

    detail::check_budget(m.param_count(), m.arch, cfg.enforce_budget);
    return m;
}

template <typename T>
Model<T> build_cnn(const CnnConfig& cfg, std::uint64_t seed) {
    if (cfg.enc1 <= 0 || cfg.enc2 <= 0 || cfg.enc3 <= 0 || cfg.bott <= 0 || cfg.dec1 <= 0 ||
        cfg.dec2 <= 0 || cfg.dec3 <= 0)
        throw ConfigError("cnn: widths must be positive");
    Rng rng(stream_seed(seed, "init-cnn"));

    Model<T> m;
    m.in_channels = cfg.in_channels;
    m.arch = "cnn:k" + std::to_string(cfg.in_channels) + ":i" + std::to_string(cfg.image) + ":e" +
             std::to_string(cfg.enc1) + "-" + std::to_string(cfg.enc2) + "-" + std::to_string(cfg.enc3) +
             ":b" + std::to_string(cfg.bott) + ":d" + std::to_string(cfg.dec1) + "-" +
             std::to_string(cfg.dec2) + "-" + std::to_string(cfg.dec3);

    // three stride-2 stages: 64 -> 32 -> 16 -> 8
    int cur = m.add(std::make_unique<Conv2d<T>>(cfg.in_channels, cfg.enc1, 3, 2, 1, rng), {-1});
    const int s32 = m.add(std::make_unique<Gelu<T>>(), {cur});
    cur = m.add(std::make_unique<Conv2d<T>>(cfg.enc1, cfg.enc2, 3, 2, 1, rng), {s32});
    const int s16 = m.add(std::make_unique<Gelu<T>>(), {cur});
    cur = m.add(std::make_unique<Conv2d<T>>(cfg.enc2, cfg.enc3, 3, 2, 1, rng), {s16});
    cur = m.add(std::make_unique<Gelu<T>>(), {cur});
    cur = m.add(std::make_unique<Conv2d<T>>(cfg.enc3, cfg.bott, 3, 1, 1, rng), {cur});
    cur = m.add(std::make_unique<Gelu<T>>(), {cur});
    cur = m.add(std::make_unique<Conv2d<T>>(cfg.bott, cfg.bott, 3, 1, 1, rng), {cur});
    cur = m.add(std::make_unique<Gelu<T>>(), {cur});
    cur = m.add(std::make_unique<Conv2d<T>>(cfg.bott, cfg.bott, 3, 1, 1, rng), {cur});
    cur = m.add(std::make_unique<Gelu<T>>(), {cur});
    m.encoder_end = cur + 1;

    cur = m.add(std::make_unique<TransposedConv2d<T>>(cfg.bott, cfg.dec1, 4, 2, 1, rng), {cur});
    cur = m.add(std::make_unique<Gelu<T>>(), {cur});
    cur = m.add(std::make_unique<ConcatSkip<T>>(), {cur, s16});
    cur = m.add(std::make_unique<TransposedConv2d<T>>(cfg.dec1 + cfg.enc2, cfg.dec2, 4, 2, 1, rng), {cur});
    cur = m.add(std::make_unique<Gelu<T>>(), {cur});
    cur = m.add(std::make_unique<ConcatSkip<T>>(), {cur, s32});
    cur = m.add(std::make_unique<TransposedConv2d<T>>(cfg.dec2 + cfg.enc1, cfg.dec3, 4, 2, 1, rng), {cur});
    cur = m.add(std::make_unique<Gelu<T>>(), {cur});
    cur = m.add(std::make_unique<Conv2d<T>>(cfg.dec3, 1, 1, 1, 0, rng), {cur});
    m.skip_taps = {s16, s32};

    detail::check_budget(m.param_count(), m.arch, cfg.enforce_budget);
    return m;
}

template <typename T>
Model<T> build_mlp(const MlpConfig& cfg, std::uint64_t seed) {
    if (cfg.hidden <= 0) throw ConfigError("mlp: hidden width must be positive");
    Rng rng(stream_seed(seed, "init-mlp"));
    const int flat = cfg.in_channels * cfg.image * cfg.image;
    const int out = cfg.image * cfg.image;

    Model<T> m;
    m.in_channels = cfg.in_channels;
    m.arch = "mlp:k" + std::to_string(cfg.in_channels) + ":i" + std::to_string(cfg.image) + ":h" +
             std::to_string(cfg.hidden);

    int cur = m.add(std::make_unique<Reshape<T>>(std::vector<int>{1, flat}), {-1});
    cur = m.add(std::make_unique<Linear<T>>(flat, cfg.hidden, rng), {cur});
    cur = m.add(std::make_unique<Gelu<T>>(), {cur});
    m.encoder_end = cur + 1;  // latent is the hidden bottleneck

    cur = m.add(std::make_unique<Linear<T>>(cfg.hidden, out, rng), {cur});
    cur = m.add(std::make_unique<Reshape<T>>(std::vector<int>{1, cfg.image, cfg.image}), {cur});

    detail::check_budget(m.param_count(), m.arch, cfg.enforce_budget);
    return m;
}

enum class Backbone { vit, cnn, mlp };

const char* backbone_name(Backbone b);
Backbone backbone_from_name(const std::string& name);

// Rebuild a model from its architecture identity string (as stored in
// checkpoints), e.g. "mlp:k4:i64:h29". Weights are freshly initialized.
Model<float> build_from_arch(const std::string& arch, std::uint64_t seed);

// Default-configured backbone with the given input window length.
template <typename T>
Model<T> build_backbone(Backbone b, int in_channels, std::uint64_t seed) {
    switch (b) {
        case Backbone::vit: {
            VitConfig c;
            c.in_channels = in_channels;
            return build_vit<T>(c, seed);
        }
        case Backbone::cnn: {
            CnnConfig c;
            c.in_channels = in_channels;
            return build_cnn<T>(c, seed);
        }
        case Backbone::mlp: {
            MlpConfig c;
            c.in_channels = in_channels;
            return build_mlp<T>(c, seed);
        }
    }
    throw ArgumentError("unknown backbone");
}

}  // namespace rqmap
