#include <doctest.h>

#include <cmath>

#include "rqmap/eval.hpp"

using namespace rqmap;

TEST_CASE("eval: psnr closed-form examples") {
    std::vector<float> truth(100, 0.0f);
    std::vector<float> pred(100, 0.1f);  // MSE = 0.01
    CHECK(psnr(pred, truth) == doctest::Approx(20.0).epsilon(1e-7));

    pred.assign(100, 0.5f);  // MSE = 0.25
    CHECK(psnr(pred, truth) == doctest::Approx(10.0 * std::log10(1.0 / 0.25)).epsilon(1e-9));

    // larger data range raises the score by 20*log10(range)
    CHECK(psnr(pred, truth, 2.0) == doctest::Approx(10.0 * std::log10(4.0 / 0.25)).epsilon(1e-9));

    CHECK(psnr(truth, truth) == 100.0);  // exact match hits the cap

    std::vector<float> other(50, 0.0f);
    CHECK_THROWS_AS(psnr(pred, other), ShapeError);
}

TEST_CASE("eval: standard evaluation areas") {
    const auto regions = RegionMap::standard();
    CHECK(regions.area(1).r0 == 4);
    CHECK(regions.area(1).r1 == 24);
    CHECK(regions.area(1).cells() == 400);
    CHECK(regions.area(4).r1 == 60);
    CHECK(regions.area(4).c0 == 40);
    CHECK(regions.area(5).cells() == 16 * 64);
    CHECK(regions.area(5).c0 == 0);
    CHECK_THROWS_AS(regions.area(0), ArgumentError);
    CHECK_THROWS_AS(regions.area(6), ArgumentError);

    // corner areas are pairwise disjoint
    for (int i = 1; i <= 4; ++i)
        for (int j = i + 1; j <= 4; ++j) {
            const auto &a = regions.area(i), &b = regions.area(j);
            const bool overlap = a.r0 < b.r1 && b.r0 < a.r1 && a.c0 < b.c1 && b.c0 < a.c1;
            CHECK_FALSE(overlap);
        }
}

TEST_CASE("eval: regional psnr localizes the error") {
    const auto regions = RegionMap::standard();
    Tensor<float> truth({1, 64, 64});
    truth.fill(0.5f);
    Tensor<float> pred = truth;

    // perturb only area 1
    const auto& a1 = regions.area(1);
    for (int r = a1.r0; r < a1.r1; ++r)
        for (int c = a1.c0; c < a1.c1; ++c)
            pred.v[static_cast<std::size_t>(r) * 64 + static_cast<std::size_t>(c)] += 0.1f;

    const auto scores = regional_psnr(pred, truth, regions);
    CHECK(scores[1] == doctest::Approx(20.0).epsilon(1e-5));  // MSE 0.01 inside area 1
    CHECK(scores[2] == 100.0);
    CHECK(scores[3] == 100.0);
    CHECK(scores[4] == 100.0);
    CHECK(scores[5] == 100.0);  // the strip misses the corner boxes
    // global MSE = 0.01 * 400/4096
    CHECK(scores[0] == doctest::Approx(10.0 * std::log10(4096.0 / (0.01 * 400))).epsilon(1e-4));
}

TEST_CASE("eval: inference timing statistics are well-formed") {
    auto m = build_mlp<float>(MlpConfig{4, 16, 29, false}, 1);
    Tensor<float> x({4, 16, 16});
    x.fill(0.2f);
    const auto stats = benchmark_inference(m, x, 2, 15);
    CHECK(stats.n_runs == 15);
    CHECK(stats.mean_ms > 0.0);
    CHECK(stats.p50_ms > 0.0);
    CHECK(stats.p95_ms >= stats.p50_ms);
    CHECK_THROWS_AS(benchmark_inference(m, x, 0, 5), ArgumentError);  // below the minimum runs
}

TEST_CASE("eval: model comparison table reports per-region means") {
    SceneSpec spec;
    DatagenConfig dg;
    dg.n_labeled = 4;
    dg.h = dg.w = 64;
    const auto samples = make_stage2_labeled(spec, Modality::radio, dg);

    auto m1 = build_mlp<float>(MlpConfig{4, 64, 29, false}, 1);
    auto m2 = build_mlp<float>(MlpConfig{4, 64, 29, false}, 2);
    const auto report = evaluate_models({{"a", &m1}, {"b", &m2}}, samples, RegionMap::standard());
    REQUIRE(report.rows.size() == 2u);
    CHECK(report.sample_count == 4);
    for (const auto& row : report.rows)
        for (double v : row.psnr_db) {
            CHECK(v > 0.0);
            CHECK(v <= 100.0);
        }
    CHECK(report.rows[0].model == "a");
    CHECK(report.rows[1].model == "b");
}

TEST_CASE("eval: test_psnr averages over the held-out ids") {
    SceneSpec spec;
    DatagenConfig dg;
    dg.n_labeled = 6;
    dg.h = dg.w = 16;
    const auto samples = make_stage2_labeled(spec, Modality::radio, dg);
    auto m = build_mlp<float>(MlpConfig{4, 16, 29, false}, 3);

    const double all = test_psnr(m, samples, {0, 1, 2, 3, 4, 5});
    CHECK(all > 0.0);
    CHECK(all < 100.0);
    CHECK_THROWS_AS(test_psnr(m, samples, {}), ArgumentError);
    CHECK_THROWS_AS(test_psnr(m, samples, {99}), ArgumentError);
}
