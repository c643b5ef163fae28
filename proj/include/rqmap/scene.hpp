#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "rqmap/regions.hpp"

namespace rqmap {

enum class SourceKind { radio_antenna, light, heat };

struct SourceSpec {
    SourceKind kind = SourceKind::radio_antenna;
    std::array<double, 3> position_m{0, 0, 0};
    double power = 0.0;  // dBm for radio, radiant intensity for light, fixed temperature for heat
};

// Parametric description of the warehouse; every field is user-configurable.
struct SceneSpec {
    double floor_x_m = 50.0;
    double floor_y_m = 50.0;
    double ceiling_m = 8.0;
    int shelf_rows = 6;
    int shelf_cols = 4;
    double shelf_len_m = 6.0;   // footprint along x
    double shelf_wid_m = 1.5;   // footprint along y
    double shelf_base_height_m = 2.0;
    double goods_amplitude_m = 5.0;
    int goods_period_steps = 6;
    int n_obstacles = 3;
    double obstacle_min_m = 0.8;
    double obstacle_max_m = 2.5;
    std::uint64_t rng_seed = 1;

    // throws ConfigError naming the violated field
    void validate() const;
};

struct Shelf {
    double cx_m = 0, cy_m = 0;   // footprint centre
    double len_m = 0, wid_m = 0; // extent along x / y
    std::vector<double> goods_height_m;  // per-cell total height (base + goods), cells along x
};

struct Obstacle {
    double cx_m = 0, cy_m = 0;
    double sx_m = 0, sy_m = 0;   // footprint extent
    double height_m = 0;
    double vx_mps = 0, vy_mps = 0;  // metres per time step
};

struct SceneState {
    SceneSpec spec;
    int t = 0;
    std::vector<Shelf> shelves;
    std::vector<Obstacle> obstacles;
    std::vector<SourceSpec> sources;
};

enum class AugmentOp { shelf_dropout, goods_permute, obstacle_inject, goods_rescale };
enum class AntennaPlacement { corner, center };

// Deterministic world construction: identical (spec, t) gives a bit-identical state.
SceneState build_scene(const SceneSpec& spec, int t);

// States for t0..t0+len-1; element i equals build_scene(spec, t0+i).
std::vector<SceneState> evolve_sequence(const SceneSpec& spec, int t0, int len);

// Physically valid random variant of a scene; pure in (scene, seed, ops).
SceneState augment(const SceneState& scene, std::uint64_t rng_seed, const std::set<AugmentOp>& ops);

// Remove every shelf whose footprint centroid falls in one of the named areas.
SceneState ood_variant(const SceneState& scene, const std::set<int>& areas,
                       const RegionMap& regions = RegionMap::standard());

// Source placement helpers (positions fixed by the experiment layout).
SourceSpec radio_antenna(const SceneSpec& spec, AntennaPlacement placement, double power_dbm = 5.0);
std::vector<SourceSpec> corridor_lights(const SceneSpec& spec);
std::vector<SourceSpec> corridor_heat_sources(const SceneSpec& spec);

// Validates every SceneState invariant (heights, bounds); throws on violation.
void check_state(const SceneState& s);

}  // namespace rqmap
