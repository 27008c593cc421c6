#include "sail/attention.hpp"
#include "sail/core.hpp"
#include "sail/error.hpp"
#include "sail/gradcheck.hpp"
#include "sail/ops.hpp"
#include "sail/region_encoder.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace sail;

namespace {

Box random_box(Rng& rng) { return {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0.2, 4), rng.uniform(0.2, 4)}; }

ImageQuery random_query(Rng& rng, std::size_t m, std::size_t d, std::size_t dg) {
    ImageQuery q;
    q.regions = test::random_tensor(rng, {m, d});
    for (std::size_t i = 0; i < m; ++i) q.boxes.push_back(random_box(rng));
    q.global = test::random_tensor(rng, {dg});
    return q;
}

ParamStore random_encoder(Rng& rng, std::size_t d, std::size_t dg) {
    ParamStore ps;
    add_region_encoder_params(ps, rng, "reg", d, dg);
    ps.value("reg.norm.gain") = test::random_tensor(rng, {d});
    ps.value("reg.norm.bias") = test::random_tensor(rng, {d});
    return ps;
}

}  // namespace

TEST_CASE("relative_position examples") {
    const Box b{1.5, -2.0, 3.0, 0.5};
    for (double v : relative_position(b, b)) CHECK(v == 0.0);
    const auto r = relative_position({3, 2, 2, 4}, {1, 2, 2, 2});
    CHECK(r[0] == 1.0);
    CHECK(r[1] == 0.0);
    CHECK(r[2] == 0.0);
    CHECK(r[3] == doctest::Approx(0.6931471805599453).epsilon(1e-15));
    CHECK_THROWS_AS(relative_position({0, 0, 0, 1}, {0, 0, 1, 1}), Error);
    CHECK_THROWS_AS(relative_position({0, 0, 1, 1}, {0, 0, 1, -1}), Error);
}

TEST_CASE("relative_position is invariant to uniform scaling and joint translation") {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const Box a = random_box(rng), b = random_box(rng);
        const double s = rng.uniform(0.1, 10.0), tx = rng.uniform(-20, 20), ty = rng.uniform(-20, 20);
        const auto base = relative_position(a, b);
        const auto scaled = relative_position({a.x * s, a.y * s, a.w * s, a.h * s}, {b.x * s, b.y * s, b.w * s, b.h * s});
        const auto moved = relative_position({a.x + tx, a.y + ty, a.w, a.h}, {b.x + tx, b.y + ty, b.w, b.h});
        for (int k = 0; k < 4; ++k) {
            CHECK(std::abs(base[k] - scaled[k]) < 1e-12);
            CHECK(std::abs(base[k] - moved[k]) < 1e-12);
        }
    }
}

TEST_CASE("region_self_atten with one region returns it") {
    Rng rng(2);
    Graph g;
    auto r = test::random_tensor(rng, {1, 6});
    Var out = region_self_atten(g.constant(r), relative_position_table({random_box(rng)}), g.constant(test::random_tensor(rng, {6, 4})));
    CHECK(g.value(out) == r);
}

TEST_CASE("region_self_atten with zero position projection is plain self-attention") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 1 + rng.index(8), d = 1 + rng.index(8);
        auto r = test::random_tensor(rng, {m, d});
        std::vector<Box> boxes;
        for (std::size_t i = 0; i < m; ++i) boxes.push_back(random_box(rng));
        Graph g;
        auto out = g.value(region_self_atten(g.constant(r), relative_position_table(boxes), g.constant(Tensor::matrix(d, 4))));
        CHECK(max_abs_diff(out, dot_atten(r, r, r)) < 1e-13);
    }
}

TEST_CASE("encode_regions is exactly permutation equivariant") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 4 + rng.index(5), d = 2 + rng.index(8), dg = 1 + rng.index(6);
        auto ps = random_encoder(rng, d, dg);
        auto q = random_query(rng, m, d, dg);
        std::vector<std::size_t> perm(m);
        for (std::size_t i = 0; i < m; ++i) perm[i] = i;
        rng.shuffle(perm);
        ImageQuery pq = q;
        for (std::size_t i = 0; i < m; ++i) {
            std::copy(q.regions.row(perm[i]).begin(), q.regions.row(perm[i]).end(), pq.regions.row(i).begin());
            pq.boxes[i] = q.boxes[perm[i]];
        }
        Graph g(ps);
        auto p = bind_region_encoder(g, "reg");
        auto a = g.value(encode_regions(g, q, p));
        auto b = g.value(encode_regions(g, pq, p));
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t c = 0; c < d; ++c) CHECK(b(i, c) == a(perm[i], c));
    }
}

TEST_CASE("encode_regions output is layer normalised and finite") {
    Rng rng(5);
    const std::size_t m = 5, d = 7, dg = 3;
    ParamStore ps;
    add_region_encoder_params(ps, rng, "reg", d, dg);
    auto q = random_query(rng, m, d, dg);
    Graph g(ps);
    auto h = g.value(encode_regions(g, q, bind_region_encoder(g, "reg")));
    REQUIRE(h.dims() == std::vector<std::size_t>{m, d});
    CHECK(h.all_finite());
    for (std::size_t i = 0; i < m; ++i) {
        double mean = 0.0, var = 0.0;
        for (double v : h.row(i)) mean += v;
        mean /= d;
        for (double v : h.row(i)) var += (v - mean) * (v - mean);
        var /= d;
        CHECK(std::abs(mean) < 1e-9);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-4));  // eps = 1e-5 inside the sqrt
    }
}

TEST_CASE("encode_regions with zero projections reduces to LayerNorm(self-attention + residual)") {
    Rng rng(6);
    const std::size_t m = 4, d = 5, dg = 3;
    ParamStore ps;
    add_region_encoder_params(ps, rng, "reg", d, dg);
    ps.value("reg.position_proj").fill(0.0);
    ps.value("reg.global_proj").fill(0.0);
    auto q = random_query(rng, m, d, dg);
    Graph g(ps);
    auto h = g.value(encode_regions(g, q, bind_region_encoder(g, "reg")));
    Tensor pre = dot_atten(q.regions, q.regions, q.regions);
    for (std::size_t k = 0; k < pre.size(); ++k) pre[k] += q.regions[k];
    CHECK(max_abs_diff(h, layer_norm(pre, Tensor({d}, 1.0), Tensor({d}, 0.0))) < 1e-12);
}

TEST_CASE("encode_regions rejects invalid queries") {
    Rng rng(7);
    auto ps = random_encoder(rng, 4, 2);
    Graph g(ps);
    auto p = bind_region_encoder(g, "reg");
    auto q = random_query(rng, 3, 4, 2);
    q.boxes[1].w = 0.0;
    CHECK_THROWS_AS(encode_regions(g, q, p), Error);
    auto q2 = random_query(rng, 3, 4, 5);
    CHECK_THROWS_AS(encode_regions(g, q2, p), Error);
}

TEST_CASE("encode_regions gradients match finite differences") {
    Rng rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t m = 1 + rng.index(5), d = 2 + rng.index(5), dg = 1 + rng.index(4);
        auto ps = random_encoder(rng, d, dg);
        auto q = random_query(rng, m, d, dg);
        const Tensor probe = test::random_tensor(rng, {m, d});
        const bool rs = trial % 2 == 0;
        LossBuilder loss = [&](Graph& g) {
            Var h = encode_regions(g, q, bind_region_encoder(g, "reg"), rs);
            return ops::sum(ops::mul(ops::tanh(h), g.constant(probe)));
        };
        auto report = grad_check(loss, ps);
        INFO("worst " << report.worst_param << " " << report.max_rel_error);
        CHECK(report.passed);
    }
}

TEST_CASE("region_self_atten gradients w.r.t. region features match finite differences") {
    Rng rng(9);
    const std::size_t m = 4, d = 3;
    ParamStore ps;
    ps.add("r", test::random_tensor(rng, {m, d}));
    ps.add("wr", test::random_tensor(rng, {d, 4}));
    std::vector<Box> boxes;
    for (std::size_t i = 0; i < m; ++i) boxes.push_back(random_box(rng));
    const Tensor table = relative_position_table(boxes);
    const Tensor probe = test::random_tensor(rng, {m, d});
    auto report = grad_check([&](Graph& g) { return ops::sum(ops::mul(region_self_atten(g.param("r"), table, g.param("wr")), g.constant(probe))); }, ps);
    CHECK(report.passed);
}
