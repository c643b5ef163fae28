#include <doctest.h>

#include "rqmap/backbones.hpp"
#include "rqmap/optim.hpp"

using namespace rqmap;

TEST_CASE("backbones: all three fit the parameter budget") {
    for (auto b : {Backbone::vit, Backbone::cnn, Backbone::mlp}) {
        auto m = build_backbone<float>(b, 4, 1);
        const auto n = count_params(m);
        INFO(m.arch, " has ", n, " parameters");
        CHECK(n >= 550000u);
        CHECK(n <= 650000u);
    }
}

TEST_CASE("backbones: budget enforcement rejects out-of-range configs") {
    VitConfig tiny;
    tiny.dim = 16;
    tiny.stem_channels = 2;
    CHECK_THROWS_AS(build_vit<float>(tiny, 1), ConfigError);
    tiny.enforce_budget = false;
    CHECK_NOTHROW(build_vit<float>(tiny, 1));

    MlpConfig huge;
    huge.hidden = 500;
    CHECK_THROWS_AS(build_mlp<float>(huge, 1), ConfigError);
}

TEST_CASE("backbones: shape contract (k,64,64) -> (1,64,64), finite") {
    Tensor<float> x({4, 64, 64});
    Rng rng(10);
    for (auto& v : x.v) v = static_cast<float>(rng.uniform());
    for (auto b : {Backbone::vit, Backbone::cnn, Backbone::mlp}) {
        auto m = build_backbone<float>(b, 4, 2);
        const auto y = m.forward(x);
        REQUIRE(y.shape == std::vector<int>{1, 64, 64});
        CHECK(y.finite());
    }
}

TEST_CASE("backbones: initialization is deterministic in the seed") {
    for (auto b : {Backbone::vit, Backbone::cnn, Backbone::mlp}) {
        auto m1 = build_backbone<float>(b, 4, 77);
        auto m2 = build_backbone<float>(b, 4, 77);
        auto m3 = build_backbone<float>(b, 4, 78);
        auto p1 = m1.param_refs();
        auto p2 = m2.param_refs();
        auto p3 = m3.param_refs();
        REQUIRE(p1.size() == p2.size());
        bool same_77 = true, same_78 = true;
        for (std::size_t i = 0; i < p1.size(); ++i) {
            same_77 &= p1[i].value->v == p2[i].value->v;
            same_78 &= p1[i].value->v == p3[i].value->v;
        }
        CHECK(same_77);
        CHECK_FALSE(same_78);
    }
}

TEST_CASE("backbones: encode + decode equals forward") {
    Tensor<float> x({4, 64, 64});
    Rng rng(11);
    for (auto& v : x.v) v = static_cast<float>(rng.uniform());
    for (auto b : {Backbone::vit, Backbone::cnn, Backbone::mlp}) {
        auto m = build_backbone<float>(b, 4, 3);
        const auto direct = m.forward(x);
        m.encode(x);
        const auto staged = m.decode();
        REQUIRE(direct.shape == staged.shape);
        CHECK(direct.v == staged.v);
        CHECK(m.encoder_end > 0);
        CHECK(m.encoder_end < static_cast<int>(m.nodes.size()));
    }
}

TEST_CASE("backbones: weight transplant copies exactly and checks compatibility") {
    auto src = build_backbone<float>(Backbone::cnn, 4, 5);
    auto dst = build_backbone<float>(Backbone::cnn, 4, 6);

    transplant_encoder(src, dst);
    auto sp = src.param_refs();
    auto dp = dst.param_refs();
    for (std::size_t i = 0; i < sp.size(); ++i) CHECK(sp[i].value->v == dp[i].value->v);

    // training the copy must not write back into the source
    const auto before = sp[0].value->v;
    dp[0].value->v[0] += 1.0f;
    CHECK(src.param_refs()[0].value->v == before);

    auto other = build_backbone<float>(Backbone::vit, 4, 5);
    CHECK_THROWS_AS(transplant_encoder(src, other), TransplantError);
}

TEST_CASE("backbones: names round-trip") {
    for (auto b : {Backbone::vit, Backbone::cnn, Backbone::mlp})
        CHECK(backbone_from_name(backbone_name(b)) == b);
    CHECK_THROWS_AS(backbone_from_name("rnn"), ArgumentError);
}
