#include "rqmap/scene.hpp"

#include <algorithm>
#include <cmath>

#include "rqmap/rng.hpp"

namespace rqmap {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Specular reflection of x into [lo, hi].
double fold(double x, double lo, double hi) {
    const double span = hi - lo;
    if (span <= 0.0) return lo;
    double y = std::fmod(x - lo, 2.0 * span);
    if (y < 0.0) y += 2.0 * span;
    return lo + (y < span ? y : 2.0 * span - y);
}

// Cells along the shelf's long axis, nominally 0.75 m each (about one grid
// cell at the default 64x64 resolution, so neighboring cells evolve
// independently at full map resolution).
int cells_per_shelf(const SceneSpec& spec) {
    return std::max(1, static_cast<int>(std::lround(spec.shelf_len_m / 0.75)));
}

Obstacle draw_obstacle(const SceneSpec& spec, Rng& rng) {
    Obstacle o;
    o.sx_m = rng.uniform(spec.obstacle_min_m, spec.obstacle_max_m);
    o.sy_m = rng.uniform(spec.obstacle_min_m, spec.obstacle_max_m);
    o.height_m = rng.uniform(1.0, std::min(2.5, spec.ceiling_m * 0.9));
    o.cx_m = rng.uniform(o.sx_m / 2, spec.floor_x_m - o.sx_m / 2);
    o.cy_m = rng.uniform(o.sy_m / 2, spec.floor_y_m - o.sy_m / 2);
    o.vx_mps = rng.uniform(-0.8, 0.8);
    o.vy_mps = rng.uniform(-0.8, 0.8);
    return o;
}

}  // namespace

void SceneSpec::validate() const {
    if (floor_x_m <= 0 || floor_y_m <= 0) throw ConfigError("floor_size_m must be strictly positive");
    if (ceiling_m <= 0) throw ConfigError("ceiling_m must be strictly positive");
    if (shelf_rows < 0) throw ConfigError("shelf_rows must be non-negative");
    if (shelf_cols < 0) throw ConfigError("shelf_cols must be non-negative");
    if (shelf_len_m <= 0 || shelf_wid_m <= 0) throw ConfigError("shelf_footprint_m must be strictly positive");
    if (shelf_cols * shelf_len_m > floor_x_m) throw ConfigError("shelf_footprint_m: shelves do not fit along x");
    if (shelf_rows * shelf_wid_m > floor_y_m) throw ConfigError("shelf_footprint_m: shelves do not fit along y");
    if (shelf_base_height_m < 0) throw ConfigError("shelf_base_height_m must be non-negative");
    if (goods_amplitude_m < 0) throw ConfigError("goods_amplitude_m must be non-negative");
    if (shelf_base_height_m + goods_amplitude_m > ceiling_m)
        throw ConfigError("goods_amplitude_m exceeds ceiling_m minus shelf_base_height_m");
    if (goods_period_steps < 2) throw ConfigError("goods_period_steps must be >= 2");
    if (n_obstacles < 0) throw ConfigError("n_obstacles must be non-negative");
    if (obstacle_min_m <= 0 || obstacle_max_m < obstacle_min_m)
        throw ConfigError("obstacle_size_m range must satisfy 0 < min <= max");
    if (obstacle_max_m >= std::min(floor_x_m, floor_y_m))
        throw ConfigError("obstacle_size_m max must be smaller than the floor");
}

SceneState build_scene(const SceneSpec& spec, int t) {
    spec.validate();
    if (t < 0) throw ArgumentError("t must be >= 0");

    SceneState s;
    s.spec = spec;
    s.t = t;

    // equally spaced shelf grid
    const int ncells = cells_per_shelf(spec);
    const double gap_x = (spec.floor_x_m - spec.shelf_cols * spec.shelf_len_m) / (spec.shelf_cols + 1);
    const double gap_y = (spec.floor_y_m - spec.shelf_rows * spec.shelf_wid_m) / (spec.shelf_rows + 1);
    Rng phase_rng(stream_seed(spec.rng_seed, "goods-phase"));
    for (int r = 0; r < spec.shelf_rows; ++r) {
        for (int c = 0; c < spec.shelf_cols; ++c) {
            Shelf sh;
            sh.len_m = spec.shelf_len_m;
            sh.wid_m = spec.shelf_wid_m;
            sh.cx_m = gap_x * (c + 1) + spec.shelf_len_m * c + spec.shelf_len_m / 2;
            sh.cy_m = gap_y * (r + 1) + spec.shelf_wid_m * r + spec.shelf_wid_m / 2;
            sh.goods_height_m.resize(static_cast<std::size_t>(ncells));
            for (int j = 0; j < ncells; ++j) {
                const double phase = phase_rng.uniform(0.0, kTwoPi);
                const double cycle = std::sin(kTwoPi * t / spec.goods_period_steps + phase);
                sh.goods_height_m[static_cast<std::size_t>(j)] =
                    spec.shelf_base_height_m + spec.goods_amplitude_m * (1.0 + cycle) / 2.0;
            }
            s.shelves.push_back(std::move(sh));
        }
    }

    // obstacles: constant velocity from a seeded start, bouncing off the walls
    Rng obst_rng(stream_seed(spec.rng_seed, "obstacles"));
    for (int i = 0; i < spec.n_obstacles; ++i) {
        Obstacle o = draw_obstacle(spec, obst_rng);
        o.cx_m = fold(o.cx_m + o.vx_mps * t, o.sx_m / 2, spec.floor_x_m - o.sx_m / 2);
        o.cy_m = fold(o.cy_m + o.vy_mps * t, o.sy_m / 2, spec.floor_y_m - o.sy_m / 2);
        s.obstacles.push_back(o);
    }
    return s;
}

std::vector<SceneState> evolve_sequence(const SceneSpec& spec, int t0, int len) {
    if (len < 1) throw ArgumentError("len must be >= 1");
    std::vector<SceneState> seq;
    seq.reserve(static_cast<std::size_t>(len));
    for (int i = 0; i < len; ++i) seq.push_back(build_scene(spec, t0 + i));
    return seq;
}

SceneState augment(const SceneState& scene, std::uint64_t rng_seed, const std::set<AugmentOp>& ops) {
    if (ops.empty()) throw ArgumentError("augment: ops set must be non-empty");
    SceneState out = scene;
    Rng rng(stream_seed(rng_seed, "augment"));

    if (ops.count(AugmentOp::shelf_dropout) && !out.shelves.empty()) {
        const std::size_t n = std::min<std::size_t>(1 + rng.uniform_int(2), out.shelves.size());
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t idx = static_cast<std::size_t>(rng.uniform_int(out.shelves.size()));
            out.shelves.erase(out.shelves.begin() + static_cast<std::ptrdiff_t>(idx));
            if (out.shelves.empty()) break;
        }
    }
    if (ops.count(AugmentOp::goods_permute)) {
        for (auto& sh : out.shelves) rng.shuffle(sh.goods_height_m);
    }
    if (ops.count(AugmentOp::obstacle_inject)) {
        const std::size_t n = 1 + rng.uniform_int(3);
        for (std::size_t i = 0; i < n; ++i) out.obstacles.push_back(draw_obstacle(out.spec, rng));
    }
    if (ops.count(AugmentOp::goods_rescale)) {
        const double f = rng.uniform(0.5, 1.0);
        for (auto& sh : out.shelves)
            for (double& h : sh.goods_height_m) h *= f;
    }
    check_state(out);
    return out;
}

SceneState ood_variant(const SceneState& scene, const std::set<int>& areas, const RegionMap& regions) {
    if (areas.empty()) throw ArgumentError("ood_variant: areas set must be non-empty");
    for (int id : areas) regions.area(id);  // validates ids

    SceneState out = scene;
    const double fx = scene.spec.floor_x_m;
    const double fy = scene.spec.floor_y_m;
    auto in_named_area = [&](const Shelf& sh) {
        const int c = std::clamp(static_cast<int>(sh.cx_m / fx * regions.grid_w), 0, regions.grid_w - 1);
        const int r = std::clamp(static_cast<int>(sh.cy_m / fy * regions.grid_h), 0, regions.grid_h - 1);
        for (int id : areas)
            if (regions.area(id).contains(r, c)) return true;
        return false;
    };
    out.shelves.erase(std::remove_if(out.shelves.begin(), out.shelves.end(), in_named_area),
                      out.shelves.end());
    return out;
}

SourceSpec radio_antenna(const SceneSpec& spec, AntennaPlacement placement, double power_dbm) {
    SourceSpec src;
    src.kind = SourceKind::radio_antenna;
    src.power = power_dbm;
    const double z = spec.ceiling_m - 0.5;  // ceiling-mounted
    if (placement == AntennaPlacement::corner)
        src.position_m = {2.0, 2.0, z};
    else
        src.position_m = {spec.floor_x_m / 2, spec.floor_y_m / 2, z};
    return src;
}

std::vector<SourceSpec> corridor_lights(const SceneSpec& spec) {
    std::vector<SourceSpec> lights;
    const double x = spec.floor_x_m / 2;  // central corridor
    const double z = spec.ceiling_m - 1.0;
    for (double frac : {0.2, 0.4, 0.6, 0.8})
        lights.push_back({SourceKind::light, {x, spec.floor_y_m * frac, z}, 100.0});
    return lights;
}

std::vector<SourceSpec> corridor_heat_sources(const SceneSpec& spec) {
    std::vector<SourceSpec> srcs;
    const double x = spec.floor_x_m / 2;
    for (double frac : {0.25, 0.5, 0.75})
        srcs.push_back({SourceKind::heat, {x, spec.floor_y_m * frac, 1.0}, 1.0});
    return srcs;
}

void check_state(const SceneState& s) {
    const auto& spec = s.spec;
    for (const auto& sh : s.shelves) {
        if (sh.cx_m - sh.len_m / 2 < -1e-9 || sh.cx_m + sh.len_m / 2 > spec.floor_x_m + 1e-9 ||
            sh.cy_m - sh.wid_m / 2 < -1e-9 || sh.cy_m + sh.wid_m / 2 > spec.floor_y_m + 1e-9)
            throw ConfigError("shelf footprint outside floor bounds");
        for (double h : sh.goods_height_m)
            if (h < -1e-9 || h > spec.ceiling_m + 1e-9)
                throw ConfigError("goods height outside [0, ceiling]");
    }
    for (const auto& o : s.obstacles) {
        if (o.cx_m - o.sx_m / 2 < -1e-9 || o.cx_m + o.sx_m / 2 > spec.floor_x_m + 1e-9 ||
            o.cy_m - o.sy_m / 2 < -1e-9 || o.cy_m + o.sy_m / 2 > spec.floor_y_m + 1e-9)
            throw ConfigError("obstacle footprint outside floor bounds");
        if (o.height_m < 0 || o.height_m >= spec.ceiling_m)
            throw ConfigError("obstacle height must be in [0, ceiling)");
    }
}

}  // namespace rqmap
