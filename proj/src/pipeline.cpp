#include "rqmap/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rqmap {

namespace {

Tensor<float> depth_to_tensor(const DepthMap& d) {
    Tensor<float> t({1, d.h, d.w});
    std::copy(d.values.begin(), d.values.end(), t.v.begin());
    return t;
}

Tensor<float> field_to_tensor(const FieldMap& f) {
    Tensor<float> t({1, f.h, f.w});
    std::copy(f.values.begin(), f.values.end(), t.v.begin());
    return t;
}

// Shared mini-batch loop over (input, target) pairs. Deterministic: fixed
// reshuffle stream, sequential per-sample passes, fixed accumulation order.
std::vector<EpochLoss> train_loop(Model<float>& model,
                                  const std::vector<const Tensor<float>*>& train_x,
                                  const std::vector<const Tensor<float>*>& train_y,
                                  const std::vector<const Tensor<float>*>& test_x,
                                  const std::vector<const Tensor<float>*>& test_y,
                                  const TrainConfig& cfg) {
    Adam<float> opt(model, cfg.lr);
    Rng shuffle_rng(stream_seed(cfg.seed, "epoch-shuffle"));
    std::vector<std::size_t> order(train_x.size());
    std::iota(order.begin(), order.end(), 0);

    // linear warmup over the first 5% of steps, then cosine decay to 10% of
    // the peak rate; stabilizes the attention blocks without hurting the
    // convolutional models
    const std::size_t batches_per_epoch =
        (order.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
        static_cast<std::size_t>(cfg.batch_size);
    const std::size_t total_steps = std::max<std::size_t>(1, batches_per_epoch * cfg.epochs);
    const std::size_t warmup_steps = std::max<std::size_t>(1, total_steps / 20);
    std::size_t sched_step = 0;

    std::vector<EpochLoss> history;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double train_acc = 0.0;
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t bend = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
            const double warm = std::min(1.0, static_cast<double>(sched_step + 1) /
                                                  static_cast<double>(warmup_steps));
            const double prog = static_cast<double>(sched_step) / static_cast<double>(total_steps);
            opt.set_lr(cfg.lr * warm * (0.1 + 0.9 * 0.5 * (1.0 + std::cos(prog * 3.14159265358979))));
            ++sched_step;
            model.zero_grads();
            for (std::size_t i = b; i < bend; ++i) {
                const std::size_t s = order[i];
                auto [loss, gloss] = mse_loss(model.forward(*train_x[s]), *train_y[s]);
                if (!std::isfinite(loss))
                    throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                       ", sample " + std::to_string(s));
                train_acc += loss;
                model.backward(gloss);
            }
            model.scale_grads(1.0f / static_cast<float>(bend - b));
            opt.step(model);
        }
        double test_acc = 0.0;
        for (std::size_t s = 0; s < test_x.size(); ++s)
            test_acc += mse_loss(model.forward(*test_x[s]), *test_y[s]).first;
        history.push_back({train_acc / std::max<std::size_t>(1, order.size()),
                           test_acc / std::max<std::size_t>(1, test_x.size())});
    }
    return history;
}

}  // namespace

std::vector<WindowSample> window_dataset(const std::vector<std::vector<DepthMap>>& sequences, int k,
                                         int* skipped) {
    if (k < 1) throw ArgumentError("window_dataset: k must be >= 1");
    int nskipped = 0;
    std::vector<WindowSample> out;
    for (std::size_t si = 0; si < sequences.size(); ++si) {
        const auto& seq = sequences[si];
        if (static_cast<int>(seq.size()) < k + 1) {
            ++nskipped;
            continue;
        }
        for (std::size_t t = static_cast<std::size_t>(k); t < seq.size(); ++t) {
            WindowSample s;
            s.sequence_id = static_cast<int>(si);
            std::vector<DepthMap> window(seq.begin() + static_cast<std::ptrdiff_t>(t) - k,
                                         seq.begin() + static_cast<std::ptrdiff_t>(t));
            s.input = stack_window(window, k);
            s.target = depth_to_tensor(seq[t]);
            out.push_back(std::move(s));
        }
    }
    if (skipped) *skipped = nskipped;
    return out;
}

TrainResult pretrain_stage1(const std::vector<std::vector<DepthMap>>& sequences, Model<float>& model,
                            const TrainConfig& cfg) {
    cfg.validate();
    if (model.in_channels != cfg.k) throw ArgumentError("pretrain_stage1: model in_channels != k");

    // sequence-level split: no window may straddle train and test
    std::vector<int> seq_ids(sequences.size());
    std::iota(seq_ids.begin(), seq_ids.end(), 0);
    Rng split_rng(stream_seed(cfg.seed, "split"));
    split_rng.shuffle(seq_ids);
    const std::size_t n_train =
        std::max<std::size_t>(1, static_cast<std::size_t>(cfg.split_ratio * sequences.size()));

    TrainResult res;
    std::vector<std::vector<DepthMap>> train_seqs, test_seqs;
    for (std::size_t i = 0; i < seq_ids.size(); ++i) {
        if (i < n_train) {
            res.train_ids.push_back(seq_ids[i]);
            train_seqs.push_back(sequences[static_cast<std::size_t>(seq_ids[i])]);
        } else {
            res.test_ids.push_back(seq_ids[i]);
            test_seqs.push_back(sequences[static_cast<std::size_t>(seq_ids[i])]);
        }
    }

    int skipped = 0;
    auto train_samples = window_dataset(train_seqs, cfg.k, &skipped);
    res.skipped_sequences = skipped;
    auto test_samples = window_dataset(test_seqs, cfg.k, &skipped);
    res.skipped_sequences += skipped;

    std::vector<const Tensor<float>*> tx, ty, vx, vy;
    for (auto& s : train_samples) {
        tx.push_back(&s.input);
        ty.push_back(&s.target);
    }
    for (auto& s : test_samples) {
        vx.push_back(&s.input);
        vy.push_back(&s.target);
    }
    res.history = train_loop(model, tx, ty, vx, vy, cfg);
    return res;
}

Tensor<float> replicate_channels(const Tensor<float>& map, int k) {
    if (map.shape.size() != 3 || map.shape[0] != 1)
        throw ShapeError("replicate_channels: expected (1,h,w), got " + map.shape_str());
    Tensor<float> out({k, map.shape[1], map.shape[2]});
    for (int c = 0; c < k; ++c)
        std::copy(map.v.begin(), map.v.end(),
                  out.v.begin() + static_cast<std::ptrdiff_t>(c) * map.shape[1] * map.shape[2]);
    return out;
}

TrainResult finetune_stage2(const std::vector<LabeledSample>& samples, Model<float>& model,
                            const Model<float>* init, const TrainConfig& cfg) {
    cfg.validate();
    if (init) transplant_encoder(*const_cast<Model<float>*>(init), model);

    // sample-level split
    std::vector<int> ids(samples.size());
    std::iota(ids.begin(), ids.end(), 0);
    Rng split_rng(stream_seed(cfg.seed, "split"));
    split_rng.shuffle(ids);
    const std::size_t n_train =
        std::max<std::size_t>(1, static_cast<std::size_t>(cfg.split_ratio * samples.size()));

    TrainResult res;
    std::vector<Tensor<float>> rep_inputs(samples.size());
    std::vector<const Tensor<float>*> tx, ty, vx, vy;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::size_t s = static_cast<std::size_t>(ids[i]);
        rep_inputs[s] = replicate_channels(samples[s].input, model.in_channels);
        if (i < n_train) {
            res.train_ids.push_back(ids[i]);
            tx.push_back(&rep_inputs[s]);
            ty.push_back(&samples[s].target);
        } else {
            res.test_ids.push_back(ids[i]);
            vx.push_back(&rep_inputs[s]);
            vy.push_back(&samples[s].target);
        }
    }
    if (cfg.epochs > 0) res.history = train_loop(model, tx, ty, vx, vy, cfg);
    return res;
}

std::vector<Tensor<float>> rollout(Model<float>& model, const Tensor<float>& seed_window, int steps) {
    if (steps < 1) throw ArgumentError("rollout: steps must be >= 1");
    if (seed_window.shape.size() != 3 || seed_window.shape[0] != model.in_channels)
        throw ShapeError("rollout: window shape " + seed_window.shape_str() + " does not match model");
    const int k = model.in_channels;
    const int h = seed_window.shape[1], w = seed_window.shape[2];
    const std::size_t plane = static_cast<std::size_t>(h) * w;

    Tensor<float> window = seed_window;
    std::vector<Tensor<float>> preds;
    for (int s = 0; s < steps; ++s) {
        Tensor<float> y = model.forward(window);
        for (auto& v : y.v) v = std::clamp(v, 0.0f, 1.0f);
        // shift the window left by one channel and append the prediction
        for (int c = 0; c + 1 < k; ++c)
            std::copy(window.v.begin() + static_cast<std::ptrdiff_t>((c + 1) * plane),
                      window.v.begin() + static_cast<std::ptrdiff_t>((c + 2) * plane),
                      window.v.begin() + static_cast<std::ptrdiff_t>(c * plane));
        std::copy(y.v.begin(), y.v.end(),
                  window.v.begin() + static_cast<std::ptrdiff_t>((k - 1) * plane));
        preds.push_back(std::move(y));
    }
    return preds;
}

std::pair<Tensor<float>, Tensor<float>> predict_rqmap(Model<float>& stage1, Model<float>& stage2,
                                                      const Tensor<float>& window) {
    Tensor<float> x_hat = stage1.forward(window);
    Tensor<float> y_hat = stage2.forward(replicate_channels(x_hat, stage2.in_channels));
    return {std::move(x_hat), std::move(y_hat)};
}

SceneState scene_with_sources(const SceneSpec& spec, int t, AntennaPlacement antenna) {
    SceneState s = build_scene(spec, t);
    s.sources.push_back(radio_antenna(spec, antenna));
    for (auto& l : corridor_lights(spec)) s.sources.push_back(l);
    for (auto& h : corridor_heat_sources(spec)) s.sources.push_back(h);
    return s;
}

std::vector<std::vector<DepthMap>> make_stage1_sequences(const SceneSpec& base,
                                                         const DatagenConfig& cfg) {
    std::vector<std::vector<DepthMap>> out;
    out.reserve(static_cast<std::size_t>(cfg.n_sequences));
    for (int i = 0; i < cfg.n_sequences; ++i) {
        SceneSpec spec = base;
        spec.rng_seed = stream_seed(cfg.seed, "stage1-seq-" + std::to_string(i));
        auto states = evolve_sequence(spec, 0, cfg.steps);
        std::vector<DepthMap> seq;
        seq.reserve(states.size());
        for (const auto& st : states) seq.push_back(project_depth(st, cfg.h, cfg.w));
        out.push_back(std::move(seq));
    }
    return out;
}

std::vector<LabeledSample> make_stage2_labeled(const SceneSpec& base, Modality modality,
                                               const DatagenConfig& cfg,
                                               std::vector<SceneState>* scenes_out) {
    std::vector<LabeledSample> out;
    out.reserve(static_cast<std::size_t>(cfg.n_labeled));
    Rng rng(stream_seed(cfg.seed, "stage2"));
    for (int i = 0; i < cfg.n_labeled; ++i) {
        SceneSpec spec = base;
        spec.rng_seed = stream_seed(cfg.seed, "stage2-scene-" + std::to_string(i));
        const int t = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.goods_period_steps)));
        SceneState scene = scene_with_sources(spec, t, cfg.antenna);
        if (rng.uniform() < cfg.augment_fraction) {
            // generative augmentation; the field label is recomputed on the variant
            static const std::set<AugmentOp> all_ops = {AugmentOp::shelf_dropout, AugmentOp::goods_permute,
                                                        AugmentOp::obstacle_inject, AugmentOp::goods_rescale};
            std::set<AugmentOp> ops;
            for (auto op : all_ops)
                if (rng.uniform() < 0.5) ops.insert(op);
            if (ops.empty()) ops.insert(AugmentOp::goods_permute);
            scene = augment(scene, rng.next_raw(), ops);
        }
        auto [depth, field] = generate_labeled_sample(scene, modality, cfg.h, cfg.w);
        LabeledSample s;
        s.modality = modality;
        s.input = depth_to_tensor(depth);
        s.target = field_to_tensor(field);
        out.push_back(std::move(s));
        if (scenes_out) scenes_out->push_back(std::move(scene));
    }
    return out;
}

}  // namespace rqmap
