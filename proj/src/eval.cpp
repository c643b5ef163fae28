#include "rqmap/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace rqmap {

namespace {

double mse_ref(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(n);
}

double psnr_from_mse(double mse, double range) {
    if (mse <= 0.0) return 100.0;  // cap for identical maps
    return std::min(100.0, 10.0 * std::log10(range * range / mse));
}

}  // namespace

double psnr(const float* pred, const float* truth, std::size_t n, double data_range) {
    if (n == 0) throw ArgumentError("psnr: empty input");
    return psnr_from_mse(mse_ref(pred, truth, n), data_range);
}

double psnr(const Tensor<float>& pred, const Tensor<float>& truth, double data_range) {
    if (!pred.same_shape(truth))
        throw ShapeError("psnr: shapes differ: " + pred.shape_str() + " vs " + truth.shape_str());
    return psnr(pred.data(), truth.data(), pred.size(), data_range);
}

std::array<double, 6> regional_psnr(const Tensor<float>& pred, const Tensor<float>& truth,
                                    const RegionMap& regions, double data_range) {
    if (!pred.same_shape(truth)) throw ShapeError("regional_psnr: shapes differ");
    const int h = pred.shape[pred.shape.size() - 2];
    const int w = pred.shape.back();
    if (h != regions.grid_h || w != regions.grid_w)
        throw ArgumentError("regional_psnr: region map grid does not match the maps");

    std::array<double, 6> out{};
    out[0] = psnr(pred, truth, data_range);
    for (int id = 1; id <= 5; ++id) {
        const RegionRect& a = regions.area(id);
        if (a.cells() <= 0) throw ArgumentError("regional_psnr: empty region " + std::to_string(id));
        double acc = 0.0;
        for (int r = a.r0; r < a.r1; ++r)
            for (int c = a.c0; c < a.c1; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * w + c;
                const double d = static_cast<double>(pred.v[i]) - static_cast<double>(truth.v[i]);
                acc += d * d;
            }
        out[static_cast<std::size_t>(id)] = psnr_from_mse(acc / a.cells(), data_range);
    }
    return out;
}

TimingStats benchmark_inference(Model<float>& model, const Tensor<float>& input, int n_warmup,
                                int n_runs) {
    if (n_runs < 10) throw ArgumentError("benchmark_inference: n_runs must be >= 10");
    for (int i = 0; i < n_warmup; ++i) model.forward(input);
    std::vector<double> ms(static_cast<std::size_t>(n_runs));
    for (int i = 0; i < n_runs; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        model.forward(input);
        const auto t1 = std::chrono::steady_clock::now();
        ms[static_cast<std::size_t>(i)] = std::chrono::duration<double, std::milli>(t1 - t0).count();
    }
    std::sort(ms.begin(), ms.end());
    TimingStats s;
    s.n_runs = n_runs;
    for (double x : ms) s.mean_ms += x;
    s.mean_ms /= n_runs;
    s.p50_ms = ms[static_cast<std::size_t>(n_runs / 2)];
    s.p95_ms = ms[static_cast<std::size_t>(std::min(n_runs - 1, (n_runs * 95) / 100))];
    return s;
}

EvalReport evaluate_models(std::map<std::string, Model<float>*> models,
                           const std::vector<LabeledSample>& samples, const RegionMap& regions) {
    EvalReport report;
    report.sample_count = static_cast<int>(samples.size());
    for (auto& [name, model] : models) {
        EvalRow row;
        row.model = name;
        std::array<double, 6> mse_acc{};
        for (const auto& s : samples) {
            Tensor<float> pred = model->forward(replicate_channels(s.input, model->in_channels));
            // aggregate MSE (not PSNR) across samples, then convert once
            const auto h = s.target.shape[1];
            const auto w = s.target.shape[2];
            mse_acc[0] += mse_ref(pred.data(), s.target.data(), pred.size());
            for (int id = 1; id <= 5; ++id) {
                const RegionRect& a = regions.area(id);
                double acc = 0.0;
                for (int r = a.r0; r < a.r1; ++r)
                    for (int c = a.c0; c < a.c1; ++c) {
                        const std::size_t i = static_cast<std::size_t>(r) * w + c;
                        const double d =
                            static_cast<double>(pred.v[i]) - static_cast<double>(s.target.v[i]);
                        acc += d * d;
                    }
                mse_acc[static_cast<std::size_t>(id)] += acc / a.cells();
            }
            (void)h;
        }
        for (std::size_t i = 0; i < 6; ++i)
            row.psnr_db[i] = psnr_from_mse(mse_acc[i] / std::max(1, report.sample_count), 1.0);
        report.rows.push_back(row);
    }
    return report;
}

EvalReport evaluate_ood(std::map<std::string, Model<float>*> models, const SceneSpec& base_spec,
                        Modality modality, const DatagenConfig& datagen,
                        const std::set<int>& removed_areas, const RegionMap& regions) {
    // OOD test set: same generator, shelves removed from the named areas,
    // ground-truth fields regenerated on the modified scenes.
    std::vector<LabeledSample> ood_samples;
    Rng rng(stream_seed(datagen.seed, "ood"));
    for (int i = 0; i < datagen.n_labeled; ++i) {
        SceneSpec spec = base_spec;
        spec.rng_seed = stream_seed(datagen.seed, "ood-scene-" + std::to_string(i));
        const int t = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(spec.goods_period_steps)));
        SceneState scene = ood_variant(scene_with_sources(spec, t, datagen.antenna), removed_areas, regions);
        auto [depth, field] = generate_labeled_sample(scene, modality, datagen.h, datagen.w);
        LabeledSample s;
        s.modality = modality;
        s.input = Tensor<float>({1, depth.h, depth.w}, std::vector<float>(depth.values));
        s.target = Tensor<float>({1, field.h, field.w}, std::vector<float>(field.values));
        ood_samples.push_back(std::move(s));
    }
    EvalReport report = evaluate_models(std::move(models), ood_samples, regions);
    report.config_digest = datagen.seed;
    return report;
}

double test_psnr(Model<float>& model, const std::vector<LabeledSample>& samples,
                 const std::vector<int>& test_ids) {
    if (test_ids.empty()) throw ArgumentError("test_psnr: empty test set");
    double mse_acc = 0.0;
    for (int id : test_ids) {
        if (id < 0 || id >= static_cast<int>(samples.size()))
            throw ArgumentError("test_psnr: sample id " + std::to_string(id) + " out of range");
        const auto& s = samples[static_cast<std::size_t>(id)];
        Tensor<float> pred = model.forward(replicate_channels(s.input, model.in_channels));
        mse_acc += mse_ref(pred.data(), s.target.data(), pred.size());
    }
    return psnr_from_mse(mse_acc / static_cast<double>(test_ids.size()), 1.0);
}

std::vector<SweepPoint> data_efficiency_sweep(Model<float>& gfm, const SceneSpec& base_spec,
                                              Modality modality,
                                              const std::vector<int>& sample_counts,
                                              int n_seeds, const TrainConfig& base_cfg,
                                              const DatagenConfig& base_datagen) {
    std::vector<SweepPoint> points;
    for (int count : sample_counts) {
        for (int seed_i = 0; seed_i < n_seeds; ++seed_i) {
            DatagenConfig dg = base_datagen;
            dg.n_labeled = count;
            dg.seed = stream_seed(base_datagen.seed, "sweep-" + std::to_string(count) + "-" +
                                                         std::to_string(seed_i));
            auto samples = make_stage2_labeled(base_spec, modality, dg);

            TrainConfig cfg = base_cfg;
            cfg.seed = stream_seed(base_cfg.seed, "sweep-train-" + std::to_string(count) + "-" +
                                                      std::to_string(seed_i));

            SweepPoint p;
            p.sample_count = count;
            p.seed = cfg.seed;

            Model<float> with = build_backbone<float>(Backbone::vit, gfm.in_channels, cfg.seed + 1);
            auto res_with = finetune_stage2(samples, with, &gfm, cfg);
            p.psnr_with_gfm = test_psnr(with, samples, res_with.test_ids);
            for (auto& e : res_with.history) p.test_loss_with.push_back(e.test);

            Model<float> without = build_backbone<float>(Backbone::vit, gfm.in_channels, cfg.seed + 1);
            auto res_without = finetune_stage2(samples, without, nullptr, cfg);
            p.psnr_without_gfm = test_psnr(without, samples, res_without.test_ids);
            for (auto& e : res_without.history) p.test_loss_without.push_back(e.test);

            points.push_back(std::move(p));
        }
    }
    return points;
}

}  // namespace rqmap
