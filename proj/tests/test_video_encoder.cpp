#include "sail/core.hpp"
#include "sail/error.hpp"
#include "sail/gradcheck.hpp"
#include "sail/ops.hpp"
#include "sail/video_encoder.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace sail;

namespace {

struct Fixture {
    ParamStore ps;
    VideoEncoderConfig cfg;
    std::size_t d_f = 8, d_r = 6;

    Fixture(Rng& rng, VideoEncoderConfig c, std::size_t df = 8, std::size_t dr = 6) : cfg(c), d_f(df), d_r(dr) {
        for (std::size_t l = 0; l < cfg.layers; ++l) add_encoder_layer_params(ps, rng, "enc" + std::to_string(l), d_f, d_r, cfg);
    }

    std::vector<EncoderLayerParams> bind(Graph& g) const {
        std::vector<EncoderLayerParams> out;
        for (std::size_t l = 0; l < cfg.layers; ++l) out.push_back(bind_encoder_layer(g, "enc" + std::to_string(l), cfg.heads));
        return out;
    }

    Tensor run(const Tensor& frames, const Tensor& regions) const {
        Graph g(ps);
        return g.value(encode_video(g.constant(frames), g.constant(regions), bind(g), cfg));
    }
};

VideoEncoderConfig small_config(std::size_t layers, std::size_t window) {
    VideoEncoderConfig c;
    c.layers = layers;
    c.window = window;
    c.heads = 2;
    c.model = 8;
    c.ffn = 16;
    return c;
}

bool rows_equal(const Tensor& a, const Tensor& b, std::size_t r) {
    for (std::size_t c = 0; c < a.cols(); ++c)
        if (a(r, c) != b(r, c)) return false;
    return true;
}

}  // namespace

TEST_CASE("temporal_encoding examples") {
    auto pe = temporal_encoding(3, 6);
    for (std::size_t c = 0; c < 6; ++c) CHECK(pe(0, c) == (c % 2 == 0 ? 0.0 : 1.0));
    CHECK(pe(1, 0) == doctest::Approx(std::sin(1.0)).epsilon(1e-15));
    CHECK(pe(1, 1) == doctest::Approx(std::cos(1.0)).epsilon(1e-15));
    CHECK(pe(1, 0) == doctest::Approx(0.8415).epsilon(1e-4));
    CHECK(pe(1, 1) == doctest::Approx(0.5403).epsilon(1e-4));
    CHECK(pe(2, 2) == doctest::Approx(std::sin(2.0 / std::pow(10000.0, 2.0 / 6.0))).epsilon(1e-14));
}

TEST_CASE("temporal_encoding rows are distinct for up to 10000 positions") {
    for (std::size_t d : {2u, 8u, 32u}) {
        auto pe = temporal_encoding(10000, d);
        std::set<std::vector<double>> seen;
        for (std::size_t i = 0; i < pe.rows(); ++i) seen.emplace(pe.row(i).begin(), pe.row(i).end());
        CHECK(seen.size() == 10000);
    }
}

TEST_CASE("temporal_encoding rejects odd widths") {
    CHECK_THROWS_AS(temporal_encoding(4, 5), Error);
    CHECK_THROWS_AS(temporal_encoding(0, 4), Error);
}

TEST_CASE("fusion examples") {
    ParamStore ps;
    Graph g(ps);
    SUBCASE("scalar hand evaluation") {
        auto out = g.value(fusion(g.constant(Tensor::matrix(1, 1, {1.0})), g.constant(Tensor::matrix(1, 1, {2.0})),
                                  g.constant(Tensor::matrix(1, 4, {1, 1, 1, 1})), g.constant(Tensor::vector({0.0}))));
        CHECK(out(0, 0) == doctest::Approx(std::tanh(4.0)).epsilon(1e-15));
        CHECK(out(0, 0) == doctest::Approx(0.999329299739067).epsilon(1e-12));
    }
    SUBCASE("zero weight gives tanh of the bias") {
        Rng rng(1);
        auto a = g.constant(test::random_tensor(rng, {5, 3}));
        auto b = g.constant(test::random_tensor(rng, {5, 3}));
        auto bias = Tensor::vector({0.3, -1.0, 2.0});
        auto out = g.value(fusion(a, b, g.constant(Tensor::matrix(3, 12)), g.constant(bias)));
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t c = 0; c < 3; ++c) CHECK(out(i, c) == std::tanh(bias[c]));
    }
    SUBCASE("B = A zeroes the difference slice") {
        Rng rng(2);
        auto a = test::random_tensor(rng, {4, 2});
        Tensor w = Tensor::matrix(2, 8);
        for (std::size_t r = 0; r < 2; ++r)
            for (std::size_t c = 6; c < 8; ++c) w(r, c) = 1.0;  // only the a-b slice
        auto out = g.value(fusion(g.constant(a), g.constant(a), g.constant(w), g.constant(Tensor::vector({0.0, 0.0}))));
        for (double v : out.data()) CHECK(v == 0.0);
    }
    SUBCASE("mismatched dims are rejected") {
        CHECK_THROWS_AS(fusion(g.constant(Tensor::matrix(2, 3)), g.constant(Tensor::matrix(3, 3)), g.constant(Tensor::matrix(3, 12)),
                               g.constant(Tensor::vector({0, 0, 0}))),
                        Error);
    }
}

TEST_CASE("encode_video output shape, normalisation and determinism") {
    Rng rng(3);
    Fixture fx(rng, small_config(2, 2));
    const std::size_t n = 11;
    auto frames = test::random_tensor(rng, {n, fx.d_f});
    auto regions = test::random_tensor(rng, {4, fx.d_r});
    auto h = fx.run(frames, regions);
    REQUIRE(h.dims() == std::vector<std::size_t>{n, fx.d_f});
    CHECK(h.all_finite());
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0, var = 0.0;
        for (double v : h.row(i)) mean += v;
        mean /= fx.d_f;
        for (double v : h.row(i)) var += (v - mean) * (v - mean);
        var /= fx.d_f;
        CHECK(std::abs(mean) < 1e-9);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
    }
    CHECK(fx.run(frames, regions) == h);
}

TEST_CASE("encoder_layer without cross-attention and zero weights is a double layer norm") {
    Rng rng(4);
    auto cfg = small_config(3, 2);
    Fixture fx(rng, cfg);
    for (std::size_t i = 0; i < fx.ps.size(); ++i)
        if (fx.ps.name(i).find("norm") == std::string::npos) fx.ps.value(i).fill(0.0);
    auto frames = test::random_tensor(rng, {7, fx.d_f});
    auto regions = test::random_tensor(rng, {3, fx.d_r});

    Graph g(fx.ps);
    auto layers = fx.bind(g);
    Var f = ops::add(g.constant(frames), g.constant(temporal_encoding(7, fx.d_f)));
    for (const auto& p : layers) f = encoder_layer(f, g.constant(regions), p, cfg, false);

    Tensor expect = frames;
    auto pe = temporal_encoding(7, fx.d_f);
    for (std::size_t k = 0; k < expect.size(); ++k) expect[k] += pe[k];
    const Tensor ones = Tensor::vector(std::vector<double>(fx.d_f, 1.0)), zeros = Tensor::vector(std::vector<double>(fx.d_f, 0.0));
    for (std::size_t l = 0; l < 2 * cfg.layers; ++l) expect = layer_norm(expect, ones, zeros, layer_norm_eps);
    CHECK(max_abs_diff(g.value(f), expect) < 1e-12);
}

TEST_CASE("receptive field of L local layers is exactly L*w frames") {
    Rng rng(5);
    for (std::size_t layers : {1u, 2u, 3u}) {
        for (std::size_t w : {1u, 2u}) {
            Fixture fx(rng, small_config(layers, w));
            const std::size_t n = 2 * layers * w + 6, i = 2;
            auto frames = test::random_tensor(rng, {n, fx.d_f});
            auto regions = test::random_tensor(rng, {3, fx.d_r});
            auto base = fx.run(frames, regions);

            auto near = frames;
            near(i + layers * w, 0) += 0.5;
            auto far = frames;
            far(i + layers * w + 1, 0) += 0.5;
            CHECK_FALSE(rows_equal(fx.run(near, regions), base, i));
            CHECK(rows_equal(fx.run(far, regions), base, i));
        }
    }
}

TEST_CASE("global attention flag matches a covering local window bit-for-bit") {
    Rng rng(6);
    const std::size_t n = 9;
    auto cfg = small_config(2, n - 1);
    Fixture fx(rng, cfg);
    auto frames = test::random_tensor(rng, {n, fx.d_f});
    auto regions = test::random_tensor(rng, {5, fx.d_r});
    auto local = fx.run(frames, regions);
    fx.cfg.local = false;
    fx.cfg.window = 1;
    CHECK(fx.run(frames, regions) == local);
    fx.cfg.local = true;
    CHECK_FALSE(fx.run(frames, regions) == local);
}

TEST_CASE("encoded video depends on the image query") {
    Rng rng(7);
    for (bool multilevel : {true, false}) {
        auto cfg = small_config(2, 2);
        cfg.multilevel_cross = multilevel;
        Fixture fx(rng, cfg);
        for (int trial = 0; trial < 5; ++trial) {
            auto frames = test::random_tensor(rng, {8, fx.d_f});
            auto regions = test::random_tensor(rng, {4, fx.d_r});
            auto other = regions;
            other(1, 2) += 0.3;
            CHECK(max_abs_diff(fx.run(frames, regions), fx.run(frames, other)) > 1e-8);
        }
    }
}

TEST_CASE("single-level cross-attention ignores regions in earlier layers") {
    Rng rng(8);
    auto cfg = small_config(2, 1);
    cfg.multilevel_cross = false;
    Fixture fx(rng, cfg);
    auto frames = test::random_tensor(rng, {6, fx.d_f});
    auto regions = test::random_tensor(rng, {3, fx.d_r});
    for (std::size_t i = 0; i < fx.ps.size(); ++i)
        if (fx.ps.name(i).rfind("enc0.cross_attn", 0) == 0 || fx.ps.name(i).rfind("enc0.fusion", 0) == 0)
            fx.ps.value(i) = test::random_tensor(rng, fx.ps.value(i).dims());
    auto a = fx.run(frames, regions);
    for (std::size_t i = 0; i < fx.ps.size(); ++i)
        if (fx.ps.name(i).rfind("enc0.cross_attn", 0) == 0) fx.ps.value(i).fill(0.0);
    CHECK(fx.run(frames, regions) == a);
}

TEST_CASE("encode_video rejects a parameter list of the wrong length") {
    Rng rng(9);
    Fixture fx(rng, small_config(2, 1));
    Graph g(fx.ps);
    auto layers = fx.bind(g);
    layers.pop_back();
    CHECK_THROWS_AS(encode_video(g.constant(Tensor::matrix(4, fx.d_f)), g.constant(Tensor::matrix(2, fx.d_r)), layers, fx.cfg), Error);
}

TEST_CASE("encoder gradients match finite differences") {
    Rng rng(10);
    for (bool local : {true, false}) {
        auto cfg = small_config(1, 2);
        cfg.local = local;
        Fixture fx(rng, cfg, 8, 6);
        for (std::size_t i = 0; i < fx.ps.size(); ++i)
            if (fx.ps.name(i).find("norm") != std::string::npos) fx.ps.value(i) = test::random_tensor(rng, fx.ps.value(i).dims());
        auto frames = test::random_tensor(rng, {6, 8});
        auto regions = test::random_tensor(rng, {3, 6});
        auto probe = test::random_tensor(rng, {6, 8});
        LossBuilder loss = [&](Graph& g) {
            Var h = encode_video(g.constant(frames), g.constant(regions), fx.bind(g), fx.cfg);
            return ops::sum(ops::mul(ops::tanh(h), g.constant(probe)));
        };
        auto report = grad_check(loss, fx.ps);
        INFO("worst " << report.worst_param << " " << report.max_rel_error);
        CHECK(report.passed);
    }
}
