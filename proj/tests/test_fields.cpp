#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rqmap/fields.hpp"
#include "rqmap/rng.hpp"

using namespace rqmap;

namespace {

DepthMap flat_map(int h, int w, double ceiling = 8.0, double floor_m = 50.0) {
    DepthMap d;
    d.h = h;
    d.w = w;
    d.ceiling_m = ceiling;
    d.cell_x_m = floor_m / w;
    d.cell_y_m = floor_m / h;
    d.values.assign(static_cast<std::size_t>(h) * w, 0.0f);
    return d;
}

}  // namespace

TEST_CASE("fields: occlusion count on hand-built maps") {
    auto d = flat_map(16, 16);
    const std::array<double, 3> a{2.0, 2.0, 7.5};
    const std::array<double, 3> b{40.0, 2.0, 1.5};

    CHECK(count_occlusions(d, a, b) == 0);  // empty warehouse

    // one tall cell on the segment: cell (0, 6) covers x in [18.75, 21.875)
    d.at(0, 6) = 1.0f;
    CHECK(count_occlusions(d, a, b) == 1);

    // a short cell the ray passes above: z at x=20 is ~4.6 m, block is 2 m
    d.at(0, 6) = 0.25f;
    CHECK(count_occlusions(d, a, b) == 0);

    // endpoint cells never count
    d.at(0, 6) = 0.0f;
    d.at(0, 0) = 1.0f;   // contains a
    d.at(0, 12) = 1.0f;  // contains b
    CHECK(count_occlusions(d, a, b) == 0);
}

TEST_CASE("fields: occlusion endpoints must stay inside the volume") {
    const auto d = flat_map(16, 16);
    const std::array<double, 3> in{25.0, 25.0, 4.0};
    CHECK_THROWS_AS(count_occlusions(d, in, {51.0, 25.0, 4.0}), ArgumentError);
    CHECK_THROWS_AS(count_occlusions(d, {-0.1, 25.0, 4.0}, in), ArgumentError);
    CHECK_THROWS_AS(count_occlusions(d, in, {25.0, 25.0, 9.0}), ArgumentError);
}

TEST_CASE("fields: occlusion counting agrees with dense segment sampling") {
    SceneSpec spec;
    Rng rng(stream_seed(404, "occ-test"));
    int checked = 0;
    for (std::uint64_t seed : {10ull, 11ull}) {
        spec.rng_seed = seed;
        auto scene = build_scene(spec, static_cast<int>(seed) % 7);
        const auto depth = project_depth(scene, 64, 64);
        for (int i = 0; i < 100; ++i) {
            const std::array<double, 3> a{rng.uniform(0.0, 50.0), rng.uniform(0.0, 50.0),
                                          rng.uniform(0.5, 7.9)};
            const std::array<double, 3> b{rng.uniform(0.0, 50.0), rng.uniform(0.0, 50.0),
                                          rng.uniform(0.5, 7.9)};
            CHECK(count_occlusions(depth, a, b) == oracle::count_occlusions_sampled(depth, a, b));
            ++checked;
        }
    }
    CHECK(checked == 200);
}

TEST_CASE("fields: free-space radio value matches the closed form") {
    const auto d = flat_map(64, 64);
    SourceSpec ant{SourceKind::radio_antenna, {2.0, 2.0, 7.5}, 5.0};
    const auto f = radio_map(d, ant);

    // receiver at cell (32, 32): centre (25.390625, 25.390625, 1.5)
    const double dx = 25.390625 - 2.0, dy = 25.390625 - 2.0, dz = 1.5 - 7.5;
    const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
    const double rx = 5.0 - 40.0 - 20.0 * std::log10(dist);  // no occlusion
    CHECK(f.at(32, 32) == doctest::Approx((rx - (-90.0)) / 60.0).epsilon(1e-6));
    CHECK(f.raw_range[0] == -90.0);
    CHECK(f.raw_range[1] == -30.0);
}

TEST_CASE("fields: radio obeys distance clamp and occlusion penalty") {
    auto d = flat_map(64, 64);
    SourceSpec ant{SourceKind::radio_antenna, {2.0, 2.0, 7.5}, 5.0};
    const auto free = radio_map(d, ant);

    // an occluding wall between antenna and the far corner can only reduce rx
    for (int c = 0; c < 64; ++c) d.at(16, c) = 1.0f;
    const auto walled = radio_map(d, ant);
    for (int r = 0; r < 64; ++r)
        for (int c = 0; c < 64; ++c) CHECK(walled.at(r, c) <= free.at(r, c) + 1e-7f);

    // per-cell penalty is capped: >5 blockers saturate at 30 dB
    auto d2 = flat_map(64, 64);
    for (int c = 8; c < 20; ++c) d2.at(16, c) = 1.0f;
    const auto capped = radio_map(d2, ant);
    const std::array<double, 3> rcv{(32 + 0.5) * d2.cell_x_m, (32 + 0.5) * d2.cell_y_m, 1.5};
    const int occ = count_occlusions(d2, ant.position_m, rcv);
    if (occ > 5) {
        const double dx = rcv[0] - 2.0, dy = rcv[1] - 2.0, dz = 1.5 - 7.5;
        const double rx = 5.0 - 40.0 - 20.0 * std::log10(std::sqrt(dx * dx + dy * dy + dz * dz)) - 30.0;
        CHECK(capped.at(32, 32) ==
              doctest::Approx((std::clamp(rx, -90.0, -30.0) + 90.0) / 60.0).epsilon(1e-6));
    }

    CHECK_THROWS_AS(radio_map(d, SourceSpec{SourceKind::light, {2, 2, 7}, 1.0}), ArgumentError);
}

TEST_CASE("fields: values are always inside [0,1]") {
    SceneSpec spec;
    spec.rng_seed = 31;
    auto scene = build_scene(spec, 2);
    scene.sources.push_back(radio_antenna(spec, AntennaPlacement::corner));
    for (auto& l : corridor_lights(spec)) scene.sources.push_back(l);
    for (auto& h : corridor_heat_sources(spec)) scene.sources.push_back(h);
    for (auto m : {Modality::radio, Modality::illumination, Modality::temperature}) {
        const auto [depth, field] = generate_labeled_sample(scene, m, 64, 64);
        CHECK(field.h == 64);
        CHECK(field.modality == m);
        for (float v : field.values) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
    }
}

TEST_CASE("fields: illumination matches the brute-force recomputation") {
    SceneSpec spec;
    spec.rng_seed = 8;
    const auto scene = build_scene(spec, 4);
    const auto depth = project_depth(scene, 32, 32);
    const auto lights = corridor_lights(spec);

    const auto fast = illumination_map(depth, lights);
    const auto ref = oracle::illumination_sampled(depth, lights);
    REQUIRE(fast.values.size() == ref.values.size());
    CHECK(fast.raw_range[1] == doctest::Approx(ref.raw_range[1]).epsilon(1e-12));
    for (std::size_t i = 0; i < fast.values.size(); ++i)
        CHECK(fast.values[i] == doctest::Approx(ref.values[i]).epsilon(1e-6));

    CHECK_THROWS_AS(illumination_map(depth, {}), ArgumentError);
}

TEST_CASE("fields: relaxation temperature agrees with a dense direct solve") {
    SceneSpec spec;
    spec.rng_seed = 13;
    const auto scene = build_scene(spec, 1);
    const auto depth = project_depth(scene, 16, 16);
    const auto sources = corridor_heat_sources(spec);

    const double tol = 1e-8;
    const auto iterative = temperature_map(depth, sources, tol);
    const auto dense = oracle::temperature_dense(depth, sources);
    double max_err = 0.0;
    for (std::size_t i = 0; i < iterative.values.size(); ++i)
        max_err = std::max(max_err, std::abs(static_cast<double>(iterative.values[i]) - dense[i]));
    CHECK(max_err < 10 * tol + 1e-7);  // float storage adds ~1e-7
}

TEST_CASE("fields: temperature maximum principle and source pinning") {
    SceneSpec spec;
    spec.rng_seed = 29;
    const auto depth = project_depth(build_scene(spec, 0), 32, 32);
    const auto sources = corridor_heat_sources(spec);
    const auto f = temperature_map(depth, sources, 1e-7);
    for (float v : f.values) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    for (const auto& s : sources) {
        const int c = static_cast<int>(s.position_m[0] / depth.cell_x_m);
        const int r = static_cast<int>(s.position_m[1] / depth.cell_y_m);
        CHECK(f.at(r, c) == 1.0f);
    }

    // interior free cells are strictly below the source temperature
    CHECK(f.at(1, 1) < 1.0f);
    CHECK(f.at(1, 1) > 0.0f);
}

TEST_CASE("fields: temperature error handling") {
    const auto depth = project_depth(build_scene(SceneSpec{}, 0), 16, 16);
    const auto sources = corridor_heat_sources(SceneSpec{});

    CHECK_THROWS_AS(temperature_map(depth, sources, -1.0), ArgumentError);

    FieldConstants k;
    k.heat_max_iters = 2;  // cannot converge in two sweeps
    CHECK_THROWS_AS(temperature_map(depth, sources, 1e-12, k), NumericError);

    auto blocked = depth;
    // wall the first source in completely
    const auto& s = sources[0];
    const int c = static_cast<int>(s.position_m[0] / depth.cell_x_m);
    const int r = static_cast<int>(s.position_m[1] / depth.cell_y_m);
    blocked.at(r, c) = 1.0f;
    CHECK_THROWS_AS(temperature_map(blocked, sources, 1e-6), ArgumentError);
}

TEST_CASE("fields: modality names round-trip") {
    for (auto m : {Modality::radio, Modality::illumination, Modality::temperature})
        CHECK(modality_from_name(modality_name(m)) == m);
    CHECK_THROWS_AS(modality_from_name("sonar"), ArgumentError);
}
