#pragma once

#include <map>
#include <string>
#include <vector>

#include "rqmap/pipeline.hpp"
#include "rqmap/regions.hpp"

namespace rqmap {

// 10*log10(range^2 / MSE); zero MSE is capped at 100 dB. Double precision.
double psnr(const float* pred, const float* truth, std::size_t n, double data_range = 1.0);
double psnr(const Tensor<float>& pred, const Tensor<float>& truth, double data_range = 1.0);
template <typename V1, typename V2>
double psnr(const V1& pred, const V2& truth, double data_range = 1.0) {
    if (pred.size() != truth.size()) throw ShapeError("psnr: size mismatch");
    return psnr(pred.data(), truth.data(), pred.size(), data_range);
}

// PSNR per area 1..5 plus "Global" at index 0.
std::array<double, 6> regional_psnr(const Tensor<float>& pred, const Tensor<float>& truth,
                                    const RegionMap& regions, double data_range = 1.0);

struct TimingStats {
    double mean_ms = 0;
    double p50_ms = 0;
    double p95_ms = 0;
    int n_runs = 0;
};

// Wall-clock per single forward pass, single thread, warmup excluded.
TimingStats benchmark_inference(Model<float>& model, const Tensor<float>& input, int n_warmup,
                                int n_runs);

struct EvalRow {
    std::string model;
    std::array<double, 6> psnr_db{};  // [global, area1..area5]
};

struct EvalReport {
    std::vector<EvalRow> rows;
    int sample_count = 0;
    std::uint64_t config_digest = 0;
};

// Mean regional PSNR of each model over a set of (input, truth) pairs.
EvalReport evaluate_models(std::map<std::string, Model<float>*> models,
                           const std::vector<LabeledSample>& samples, const RegionMap& regions);

// OOD protocol: shelves removed from the named areas, ground truth
// regenerated on the modified scenes, regional PSNR per model.
EvalReport evaluate_ood(std::map<std::string, Model<float>*> models, const SceneSpec& base_spec,
                        Modality modality, const DatagenConfig& datagen,
                        const std::set<int>& removed_areas = {1, 4},
                        const RegionMap& regions = RegionMap::standard());

struct SweepPoint {
    int sample_count = 0;
    std::uint64_t seed = 0;
    double psnr_with_gfm = 0;
    double psnr_without_gfm = 0;
    std::vector<double> test_loss_with;     // per-epoch
    std::vector<double> test_loss_without;
};

// Data-efficiency sweep: fine-tune with and without the GFM
// initialization at several labeled-set sizes and seeds.
std::vector<SweepPoint> data_efficiency_sweep(Model<float>& gfm, const SceneSpec& base_spec,
                                              Modality modality,
                                              const std::vector<int>& sample_counts,
                                              int n_seeds, const TrainConfig& base_cfg,
                                              const DatagenConfig& base_datagen);

// Mean test PSNR of a trained model over the held-out ids of a TrainResult.
double test_psnr(Model<float>& model, const std::vector<LabeledSample>& samples,
                 const std::vector<int>& test_ids);

}  // namespace rqmap
