#include "sail/error.hpp"
#include "sail/eval.hpp"
#include "sail/gradcheck.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace sail;

namespace {

double brute_force_iou(const Segment& a, const Segment& b) {
    std::set<long> fa, fb, all;
    for (long k = a.s; k <= a.e; ++k) fa.insert(k), all.insert(k);
    for (long k = b.s; k <= b.e; ++k) fb.insert(k), all.insert(k);
    std::size_t inter = 0;
    for (long k : fa) inter += fb.count(k);
    if (all.empty()) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(all.size());
}

double direct_product(std::span<const double> p, std::size_t s, std::size_t e) {
    double v = 1.0;
    for (std::size_t k = 1; k <= p.size(); ++k) v *= (k >= s && k <= e) ? p[k - 1] : 1.0 - p[k - 1];
    return v;
}

Segment direct_argmax(std::span<const double> p) {
    Segment best{1, 1};
    double bv = direct_product(p, 1, 1);
    for (std::size_t s = 1; s <= p.size(); ++s)
        for (std::size_t e = s; e <= p.size(); ++e)
            if (direct_product(p, s, e) > bv) bv = direct_product(p, s, e), best = {long(s), long(e)};
    return best;
}

double exact_random_expectation(const VideoSample& v) {
    const std::size_t n = v.length();
    double total = 0.0;
    for (std::size_t s = 1; s <= n; ++s)
        for (std::size_t e = s; e <= n; ++e) total += iou({long(s), long(e)}, v.target) / double(n) / double(n - s + 1);
    return total;
}

std::vector<VideoSample> planted_set(Rng& rng, std::size_t count, std::size_t d = 6) {
    std::vector<VideoSample> out;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t n = 8 + rng.index(12);
        const long s = 1 + long(rng.index(n / 2)), e = s + long(rng.index(n / 2));
        out.push_back(test::planted_sample(rng, n, d, 3, {s, e}));
    }
    return out;
}

}  // namespace

TEST_CASE("iou examples") {
    CHECK(iou({3, 9}, {3, 9}) == 1.0);
    CHECK(iou({1, 3}, {5, 9}) == 0.0);
    CHECK(iou({2, 6}, {4, 8}) == doctest::Approx(3.0 / 7.0).epsilon(1e-15));
    CHECK(iou({6, 2}, {2, 6}) == 0.0);
    CHECK(iou({3, 3}, {3, 3}) == 1.0);
    CHECK(iou({1, 3}, {4, 6}) == 0.0);
}

TEST_CASE("iou matches per-frame set brute force on every pair up to n = 30") {
    const long n = 30;
    for (long s1 = 1; s1 <= n; ++s1)
        for (long e1 = 1; e1 <= n; ++e1)
            for (long s2 = 1; s2 <= n; ++s2)
                for (long e2 = s2; e2 <= n; ++e2) {
                    const double v = iou({s1, e1}, {s2, e2});
                    if (v != brute_force_iou({s1, e1}, {s2, e2})) {
                        FAIL("mismatch at (" << s1 << "," << e1 << ") vs (" << s2 << "," << e2 << ")");
                    }
                    if (e1 >= s1 && v != iou({s2, e2}, {s1, e1})) FAIL("asymmetric");
                    if ((v == 1.0) != (s1 == s2 && e1 == e2)) FAIL("iou 1 without identity");
                }
}

TEST_CASE("evaluate examples") {
    const std::vector<Segment> truth{{1, 10}, {1, 10}, {1, 10}};
    const std::vector<Segment> preds{{1, 10}, {1, 5}, {11, 12}};
    auto r = evaluate(preds, truth);
    CHECK(r.samples == 3);
    CHECK(r.miou == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.at(0.3) == doctest::Approx(2.0 / 3.0));
    CHECK(r.at(0.5) == doctest::Approx(1.0 / 3.0));
    CHECK(r.at(0.7) == doctest::Approx(1.0 / 3.0));

    auto perfect = evaluate(truth, truth);
    CHECK(perfect.miou == 1.0);
    for (auto [t, v] : perfect.iou_at) CHECK(v == 1.0);

    CHECK(evaluate(std::vector<Segment>{{5, 2}}, std::vector<Segment>{{2, 5}}).miou == 0.0);
    CHECK_THROWS_AS(evaluate(preds, std::vector<Segment>{{1, 2}}), Error);
    CHECK_THROWS_AS(r.at(0.9), Error);
}

TEST_CASE("IoU@R is non-increasing in R") {
    Rng rng(1);
    std::vector<double> thresholds;
    for (int k = 0; k <= 20; ++k) thresholds.push_back(k * 0.05);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Segment> preds, truth;
        for (int i = 0; i < 25; ++i) {
            const std::size_t n = 1 + rng.index(40);
            truth.push_back(random_segment(rng, n));
            preds.push_back({1 + long(rng.index(n)), 1 + long(rng.index(n))});
        }
        auto r = evaluate(preds, truth, thresholds);
        CHECK(r.miou >= 0.0);
        CHECK(r.miou <= 1.0);
        for (std::size_t t = 1; t < r.iou_at.size(); ++t) CHECK(r.iou_at[t].second <= r.iou_at[t - 1].second);
    }
}

TEST_CASE("report JSON round-trip and table") {
    auto r = evaluate(std::vector<Segment>{{1, 4}, {2, 3}}, std::vector<Segment>{{1, 4}, {1, 4}});
    CHECK(eval_report_from_json(nlohmann::json::parse(to_json(r).dump())) == r);
    CHECK_THROWS_AS(eval_report_from_json(nlohmann::json::parse("{\"miou\": 1}")), Error);
    auto table = render_table({{"Random", r}, {"SAIL", r}});
    CHECK(table.find("IoU@0.3") != std::string::npos);
    CHECK(table.find("SAIL") != std::string::npos);
    CHECK(table.find("75.00") != std::string::npos);
}

TEST_CASE("random segments are ordered and in range") {
    Rng rng(2);
    for (int i = 0; i < 2000; ++i) {
        const std::size_t n = 1 + rng.index(50);
        auto s = random_segment(rng, n);
        CHECK(s.s >= 1);
        CHECK(s.s <= s.e);
        CHECK(s.e <= long(n));
    }
}

TEST_CASE("random baseline on one-frame videos") {
    Rng rng(3);
    std::vector<VideoSample> vs{test::planted_sample(rng, 1, 4, 2, {1, 1}), test::planted_sample(rng, 1, 4, 2, {1, 1})};
    CHECK(random_baseline(vs, 11).miou == 1.0);
}

TEST_CASE("random baseline is deterministic and agrees with its expectation") {
    Rng rng(4);
    auto vs = planted_set(rng, 60);
    CHECK(random_baseline(vs, 9) == random_baseline(vs, 9));
    double exact = 0.0;
    for (const auto& v : vs) exact += exact_random_expectation(v);
    exact /= double(vs.size());
    auto mc = random_baseline_miou(vs, 5, 10000);
    CHECK(std::abs(mc.mean - exact) < 4 * mc.std_error);
    const double spread = mc.std_error * std::sqrt(double(mc.draws));
    for (std::uint64_t seed : {1u, 2u, 3u, 7u}) CHECK(std::abs(random_baseline(vs, seed).miou - mc.mean) < 3 * spread);
}

TEST_CASE("frame segment scores examples") {
    auto half = FrameScores::from_probabilities(std::vector{0.5, 0.5, 0.5});
    for (std::size_t s = 1; s <= 3; ++s)
        for (std::size_t e = s; e <= 3; ++e) CHECK(std::exp(half.log_score(s, e)) == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(half.best() == Segment{1, 1});

    auto exact = FrameScores::from_probabilities(std::vector{0.0, 1.0, 1.0, 0.0, 0.0});
    for (std::size_t s = 1; s <= 5; ++s)
        for (std::size_t e = s; e <= 5; ++e) CHECK(std::exp(exact.log_score(s, e)) == ((s == 2 && e == 3) ? 1.0 : 0.0));
    CHECK(exact.best() == Segment{2, 3});
    CHECK_THROWS_AS(FrameScores::from_probabilities(std::vector{1.2}), Error);
    CHECK_THROWS_AS(half.log_score(3, 2), Error);
}

TEST_CASE("log-space segment scores reproduce the direct product and its argmax") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.index(12);
        std::vector<double> p(n);
        for (auto& v : p) v = rng.uniform();
        auto fs = FrameScores::from_probabilities(p);
        for (std::size_t s = 1; s <= n; ++s)
            for (std::size_t e = s; e <= n; ++e)
                CHECK(std::exp(fs.log_score(s, e)) == doctest::Approx(direct_product(p, s, e)).epsilon(1e-12));
        CHECK(fs.best() == direct_argmax(p));
    }
}

TEST_CASE("logit and probability scoring agree") {
    Rng rng(6);
    std::vector<double> z(9), p(9);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = rng.normal(0, 3), p[k] = 1 / (1 + std::exp(-z[k]));
    auto a = FrameScores::from_logits(z), b = FrameScores::from_probabilities(p);
    for (std::size_t s = 1; s <= 9; ++s)
        for (std::size_t e = s; e <= 9; ++e) CHECK(a.log_score(s, e) == doctest::Approx(b.log_score(s, e)).epsilon(1e-10));
    CHECK(a.best() == b.best());
    auto saturated = FrameScores::from_logits(std::vector{-60.0, 60.0, 70.0, -50.0});
    CHECK(saturated.best() == Segment{2, 3});
}

TEST_CASE("FLP loss gradients match finite differences") {
    Rng rng(7);
    auto v = test::planted_sample(rng, 7, 4, 2, {2, 4});
    FlpConfig cfg;
    cfg.hidden = 5;
    cfg.query_proj = 3;
    auto model = FlpModel::init(4, 4, cfg);
    model.params.value("flp.hidden_bias") = test::random_tensor(rng, {5}, 0.3);
    LossBuilder loss = [&](Graph& g) { return flp_loss(g, model, v); };
    auto report = grad_check(loss, model.params);
    INFO("worst " << report.worst_param << " " << report.max_rel_error);
    CHECK(report.passed);
}

TEST_CASE("FLP training lowers the loss and beats random on planted data") {
    Rng rng(8);
    auto train = planted_set(rng, 64);
    FlpConfig cfg;
    cfg.epochs = 100;
    cfg.batch = 8;
    auto before = FlpModel::init(6, 6, cfg);
    auto model = train_flp(train, cfg);
    auto mean_loss = [&](const FlpModel& m) {
        double total = 0.0;
        for (const auto& v : train) {
            Graph g(m.params);
            total += flp_loss(g, m, v).value()[0];
        }
        return total / double(train.size());
    };
    CHECK(mean_loss(model) < 0.5 * mean_loss(before));
    std::vector<Segment> preds, truth;
    for (const auto& v : train) preds.push_back(model.predict(v)), truth.push_back(v.target);
    CHECK(evaluate(preds, truth).miou > random_baseline_miou(train, 1, 200).mean + 0.2);
    CHECK(train_flp(train, cfg).params == model.params);
}
