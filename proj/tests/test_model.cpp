#include "sail/checkpoint.hpp"
#include "sail/error.hpp"
#include "sail/gradcheck.hpp"
#include "sail/kernels.hpp"
#include "sail/model.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

using namespace sail;

namespace {

SailConfig micro_config() {
    SailConfig c;
    c.d_frame = c.d_region = c.d_global = c.d_model = 8;
    c.heads = 2;
    c.layers = 1;
    c.window = 2;
    c.d_ff = 16;
    c.d_attn = 8;
    return c;
}

SailConfig small_config() {
    SailConfig c = micro_config();
    c.layers = 2;
    c.window = 3;
    c.batch = 4;
    c.epochs = 2;
    c.lr = 3e-3;
    return c;
}

std::vector<VideoSample> planted_set(std::uint64_t seed, std::size_t count, std::size_t n, std::size_t d) {
    Rng rng(seed);
    std::vector<VideoSample> out;
    for (std::size_t i = 0; i < count; ++i) {
        const long s = rng.uniform_int(1, static_cast<long>(n) - 4);
        const long e = rng.uniform_int(s + 1, std::min<long>(s + 6, static_cast<long>(n)));
        out.push_back(test::planted_sample(rng, n, d, 3 + i % 3, {s, e}));
        out.back().id = "p" + std::to_string(i);
    }
    return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected sail::Error");
    return ErrorKind::invalid_argument;
}

}  // namespace

TEST_CASE("config json round trip and strict keys") {
    SailConfig c = small_config();
    c.no_local_attention = true;
    c.decode = DecodeMode::constrained;
    const auto j = to_json(c);
    CHECK(sail_config_from_json(nlohmann::json::parse(j.dump())) == c);

    auto bad = nlohmann::json::parse(j.dump());
    bad["dropout"] = 0.1;
    CHECK(kind_of([&] { sail_config_from_json(bad); }) == ErrorKind::config);

    auto heads = nlohmann::json::parse(j.dump());
    heads["heads"] = 3;
    CHECK(kind_of([&] { sail_config_from_json(heads); }) == ErrorKind::config);

    auto typed = nlohmann::json::parse(j.dump());
    typed["layers"] = "two";
    CHECK(kind_of([&] { sail_config_from_json(typed); }) == ErrorKind::config);

    CHECK(sail_config_from_json(nlohmann::json::object()) == SailConfig{});
}

TEST_CASE("forward yields two distributions and is deterministic") {
    const SailModel model(small_config());
    const auto set = planted_set(3, 2, 12, 8);
    for (const auto& s : set) {
        Graph g(model.params());
        const auto out = model.forward(g, s);
        CHECK(out.p_start.value().dims() == std::vector<std::size_t>{1, 12});
        CHECK(out.p_end.value().dims() == std::vector<std::size_t>{1, 12});
        CHECK(test::row_sum(out.p_start.value(), 0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(test::row_sum(out.p_end.value(), 0) == doctest::Approx(1.0).epsilon(1e-12));
        const auto a = model.predict(s), b = model.predict(s);
        CHECK(a.p_start == b.p_start);
        CHECK(a.segment == b.segment);
    }
    CHECK(SailModel(small_config()).params() == model.params());
}

TEST_CASE("end-to-end gradients match finite differences on the micro config") {
    for (bool ablate : {false, true}) {
        SailConfig cfg = micro_config();
        cfg.no_region_self_attention = ablate;
        cfg.no_bidirectional = ablate;
        SailModel model(cfg);
        Rng rng(11);
        const auto s = test::planted_sample(rng, 6, 8, 3, {2, 4});
        const LossBuilder loss = [&](Graph& g) { return model.loss(g, s); };
        const auto report = grad_check(loss, model.params());
        INFO("worst " << report.worst_param << " " << report.max_rel_error);
        CHECK(report.finite);
        CHECK(report.max_rel_error < 1e-4);
    }
}

TEST_CASE("mismatched samples name the consuming component") {
    const SailModel model(micro_config());
    Rng rng(2);
    auto s = test::planted_sample(rng, 6, 8, 3, {2, 3});
    s.frames = test::random_tensor(rng, {6, 7});
    try {
        model.predict(s);
        FAIL("expected dimension mismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::dimension_mismatch);
        CHECK(std::string(e.what()).find("video encoder") != std::string::npos);
    }
    s = test::planted_sample(rng, 6, 8, 3, {2, 3});
    s.query.global = test::random_tensor(rng, {5});
    try {
        model.predict(s);
        FAIL("expected dimension mismatch");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("region encoder") != std::string::npos);
    }
}

TEST_CASE("long videos are downsampled before prediction") {
    SailConfig cfg = micro_config();
    cfg.n_max = 10;
    const SailModel model(cfg);
    Rng rng(5);
    const auto s = test::planted_sample(rng, 37, 8, 3, {20, 30});
    const auto p = model.predict(s);
    CHECK(p.p_start.size() == 10);
    CHECK(p.segment.s >= 1);
    CHECK(p.segment.e <= 10);
    const auto report = model.evaluate(std::vector<VideoSample>{s});
    CHECK(report.samples == 1);
}

TEST_CASE("training lowers the loss on a small planted set") {
    const auto set = planted_set(21, 32, 16, 8);
    SailConfig cfg = small_config();
    cfg.epochs = 25;
    const auto result = train(set, {}, cfg);
    const auto& log = result.log.epochs;
    REQUIRE(log.size() == 25);
    CHECK(log.back().steps == 25 * 8);
    CHECK(log.back().train_loss < log.front().train_loss);
    CHECK(log.back().train_loss < 2.0 * std::log(16.0));
    CHECK(result.model.evaluate(set).miou > 0.4);
}

TEST_CASE("zero learning rate leaves the parameters untouched") {
    const auto set = planted_set(4, 8, 10, 8);
    SailConfig cfg = small_config();
    cfg.lr = 0.0;
    const auto result = train(set, set, cfg);
    CHECK(result.model.params() == SailModel(cfg).params());
}

TEST_CASE("training is reproducible and thread-count independent") {
    const auto set = planted_set(8, 10, 12, 8);
    const auto valid = planted_set(9, 4, 12, 8);
    const SailConfig cfg = small_config();
    const auto a = train(set, valid, cfg);
    kernels::set_threads(3);
    const auto b = train(set, valid, cfg);
    kernels::set_threads(1);
    CHECK(to_json(a.log).dump() == to_json(b.log).dump());
    CHECK(a.model.params() == b.model.params());
    CHECK(a.log.best_epoch >= 1);
    CHECK(timing_json(a.log).contains("total_seconds"));
    CHECK(to_json(a.log).dump().find("wall") == std::string::npos);
}

TEST_CASE("experiment grids") {
    const SailConfig base = small_config();
    const auto abl = ablation_grid(base);
    REQUIRE(abl.size() == 5);
    CHECK(abl[0].cfg == base);
    CHECK(abl[1].cfg.no_region_self_attention);
    CHECK(abl[2].cfg.no_multilevel_cross);
    CHECK(abl[3].cfg.no_local_attention);
    CHECK(abl[4].cfg.no_bidirectional);
    for (std::size_t i = 1; i < abl.size(); ++i) CHECK_FALSE(abl[i].cfg == base);

    const std::vector<std::size_t> layers{1, 3, 7};
    const auto grid = layer_grid(base, layers);
    REQUIRE(grid.size() == 3);
    CHECK(grid[2].cfg.layers == 7);
    CHECK(grid[2].name == "layers=7");
    CHECK(kind_of([&] { layer_grid(base, std::vector<std::size_t>{0}); }) == ErrorKind::config);
}

TEST_CASE("checkpoint round trip is bit exact") {
    SailConfig cfg = small_config();
    cfg.seed = 99;
    SailModel model(cfg);
    model.params().value(0)[0] = std::nextafter(1.0 / 3.0, 1.0);
    model.params().value(1)[0] = -0.0;
    const auto bytes = encode_checkpoint(model.params(), cfg);
    CHECK(std::memcmp(bytes.data(), "SAILCKPT", 8) == 0);
    CHECK(bytes[8] == 1);
    const auto ck = decode_checkpoint(bytes);
    CHECK(ck.config == cfg);
    CHECK(ck.params.names() == model.params().names());
    for (std::size_t i = 0; i < ck.params.size(); ++i) {
        const auto& a = ck.params.value(i).data();
        const auto& b = model.params().value(i).data();
        REQUIRE(a.size() == b.size());
        CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
    }
    CHECK(encode_checkpoint(ck.params, ck.config) == bytes);

    const auto dir = std::filesystem::temp_directory_path() / "sail_test_ckpt";
    std::filesystem::create_directories(dir);
    save_checkpoint(dir / "m.ckpt", model.params(), cfg);
    const SailModel loaded = load_model(dir / "m.ckpt");
    const auto set = planted_set(6, 3, 12, 8);
    for (const auto& s : set) CHECK(loaded.predict(s).p_start == model.predict(s).p_start);
    CHECK(kind_of([&] { load_checkpoint(dir / "missing.ckpt"); }) == ErrorKind::io);
    std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt checkpoints are rejected") {
    const SailConfig cfg = micro_config();
    const auto bytes = encode_checkpoint(SailModel(cfg).params(), cfg);

    auto magic = bytes;
    magic[0] = 'X';
    CHECK(kind_of([&] { decode_checkpoint(magic); }) == ErrorKind::format);

    auto version = bytes;
    version[8] = 2;
    CHECK(kind_of([&] { decode_checkpoint(version); }) == ErrorKind::format);

    for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{15}, bytes.size() / 2, bytes.size() - 1}) {
        const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + static_cast<long>(cut));
        CHECK(kind_of([&] { decode_checkpoint(truncated); }) == ErrorKind::format);
    }

    auto count = bytes;
    count[count.size() - 4] ^= 1;
    CHECK(kind_of([&] { decode_checkpoint(count); }) == ErrorKind::format);

    auto trailing = bytes;
    trailing.insert(trailing.end() - 4, std::uint8_t{0});
    CHECK(kind_of([&] { decode_checkpoint(trailing); }) == ErrorKind::format);

    SailConfig other = cfg;
    other.d_attn = 4;
    const auto mismatched = encode_checkpoint(SailModel(other).params(), cfg);
    CHECK(kind_of([&] { SailModel(cfg, decode_checkpoint(mismatched).params); }) == ErrorKind::format);
}
