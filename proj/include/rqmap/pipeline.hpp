#pragma once

#include <optional>
#include <vector>

#include "rqmap/backbones.hpp"
#include "rqmap/fields.hpp"
#include "rqmap/geometry.hpp"
#include "rqmap/optim.hpp"

namespace rqmap {

struct TrainConfig {
    int epochs = 50;
    double lr = 1e-3;
    int batch_size = 16;
    std::uint64_t seed = 1;
    int k = 4;                 // window length
    double split_ratio = 0.9;  // train fraction

    void validate() const {
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (lr <= 0) throw ConfigError("lr must be > 0");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (split_ratio <= 0 || split_ratio >= 1) throw ConfigError("split_ratio must be in (0,1)");
        if (k < 1) throw ConfigError("k must be >= 1");
    }
};

// Sliding-window sample: input channels are x_{t-k}..x_{t-1} oldest first,
// target is x_t.
struct WindowSample {
    Tensor<float> input;   // (k,h,w)
    Tensor<float> target;  // (1,h,w)
    int sequence_id = 0;
};

struct LabeledSample {
    Tensor<float> input;   // (1,h,w) depth map
    Tensor<float> target;  // (1,h,w) field map
    Modality modality = Modality::radio;
};

struct EpochLoss {
    double train = 0;
    double test = 0;
};

struct TrainResult {
    std::vector<EpochLoss> history;
    std::vector<int> train_ids;  // sequence ids (stage 1) or sample ids (stage 2)
    std::vector<int> test_ids;
    int skipped_sequences = 0;
};

// One sample per valid t in each sequence; windows never cross sequence
// boundaries. Sequences shorter than k+1 are skipped (counted in *skipped).
std::vector<WindowSample> window_dataset(const std::vector<std::vector<DepthMap>>& sequences, int k,
                                         int* skipped = nullptr);

// Algorithm "Stage 1": self-supervised next-map prediction on depth sequences.
// The train/test split is disjoint at the sequence level.
TrainResult pretrain_stage1(const std::vector<std::vector<DepthMap>>& sequences, Model<float>& model,
                            const TrainConfig& cfg);

// Algorithm "Stage 2": supervised depth -> field fine-tuning. When init is
// given the model starts from its transplanted weights (fresh optimizer);
// inputs are replicated across the model's k input channels.
TrainResult finetune_stage2(const std::vector<LabeledSample>& samples, Model<float>& model,
                            const Model<float>* init, const TrainConfig& cfg);

// Replicate a (1,h,w) map across k channels.
Tensor<float> replicate_channels(const Tensor<float>& map, int k);

// Autoregressive forecast: feed each prediction back into the window.
std::vector<Tensor<float>> rollout(Model<float>& model, const Tensor<float>& seed_window, int steps);

// Deployed two-stage prediction: x_hat from the window, y_hat from x_hat.
std::pair<Tensor<float>, Tensor<float>> predict_rqmap(Model<float>& stage1, Model<float>& stage2,
                                                      const Tensor<float>& window);

// --- dataset builders for the shipped experiments ---

struct DatagenConfig {
    int n_sequences = 200;
    int steps = 8;                 // per-sequence length (>= k+1)
    int n_labeled = 500;
    int h = 64, w = 64;
    double augment_fraction = 0.5;  // share of labeled samples that are augmented variants
    AntennaPlacement antenna = AntennaPlacement::corner;
    std::uint64_t seed = 1;
};

// Depth-map sequences from per-sequence world seeds; deterministic in cfg.
std::vector<std::vector<DepthMap>> make_stage1_sequences(const SceneSpec& base,
                                                         const DatagenConfig& cfg);

// Labeled (depth, field) pairs from independent scenes; a configurable share
// passes through the generative-augmentation path with the field recomputed
// on the augmented geometry.
std::vector<LabeledSample> make_stage2_labeled(const SceneSpec& base, Modality modality,
                                               const DatagenConfig& cfg,
                                               std::vector<SceneState>* scenes_out = nullptr);

// Scene with the sources required by the modality attached.
SceneState scene_with_sources(const SceneSpec& spec, int t, AntennaPlacement antenna);

}  // namespace rqmap
