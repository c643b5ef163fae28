#pragma once

#include <array>
#include <vector>

#include "rqmap/geometry.hpp"
#include "rqmap/scene.hpp"

namespace rqmap {

enum class Modality { radio, illumination, temperature };

const char* modality_name(Modality m);
Modality modality_from_name(const std::string& name);

// Normalized field over the same grid as the source DepthMap. raw_range maps
// physical values to [0,1] and is fixed per modality so PSNR is comparable
// across samples.
struct FieldMap {
    int h = 0, w = 0;
    Modality modality = Modality::radio;
    std::array<double, 2> raw_range{0, 1};
    std::vector<float> values;  // row-major, in [0,1]

    float at(int r, int c) const { return values[static_cast<std::size_t>(r) * w + c]; }
    float& at(int r, int c) { return values[static_cast<std::size_t>(r) * w + c]; }
};

// Physics constants of the simplified propagation models. All values are
// configuration, not fit parameters.
struct FieldConstants {
    double tx_power_dbm = 5.0;
    double pl0_db = 40.0;        // path loss at 1 m
    double path_loss_exp = 2.0;
    double occlusion_db = 6.0;   // penalty per occluding cell
    double occlusion_cap_db = 30.0;
    double rx_min_dbm = -90.0;
    double rx_max_dbm = -30.0;
    double receiver_height_m = 1.5;
    double heat_block_threshold = 0.25;  // normalized height above which a cell blocks conduction
    double heat_tol = 1e-6;
    int heat_max_iters = 50000;
};

// Number of distinct grid cells whose height blocks the 3D segment a->b.
// Exact cell-boundary traversal; a crossed cell blocks iff its height exceeds
// the segment's z at the midpoint of the crossing. Endpoint cells excluded.
int count_occlusions(const DepthMap& depth, const std::array<double, 3>& a,
                     const std::array<double, 3>& b);

FieldMap radio_map(const DepthMap& depth, const SourceSpec& antenna,
                   const FieldConstants& k = FieldConstants{});

FieldMap illumination_map(const DepthMap& depth, const std::vector<SourceSpec>& lights,
                          const FieldConstants& k = FieldConstants{});

FieldMap temperature_map(const DepthMap& depth, const std::vector<SourceSpec>& sources, double tol,
                         const FieldConstants& k = FieldConstants{});

// Depth map paired with the matching ground-truth field for the scene.
std::pair<DepthMap, FieldMap> generate_labeled_sample(const SceneState& scene, Modality modality,
                                                      int h = 64, int w = 64,
                                                      const FieldConstants& k = FieldConstants{});

}  // namespace rqmap
