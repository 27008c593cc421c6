#include "sail/eval.hpp"

#include "sail/batch.hpp"
#include "sail/error.hpp"
#include "sail/init.hpp"
#include "sail/ops.hpp"
#include "sail/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace sail {

double iou(const Segment& pred, const Segment& truth) {
    const long inter = std::max(0L, std::min(pred.e, truth.e) - std::max(pred.s, truth.s) + 1);
    if (pred.length() == 0 || inter == 0) return 0.0;
    const long uni = pred.length() + truth.length() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double EvalReport::at(double threshold) const {
    for (const auto& [r, v] : iou_at)
        if (r == threshold) return v;
    fail(ErrorKind::invalid_argument, "EvalReport: no IoU@" + std::to_string(threshold));
}

EvalReport evaluate(std::span<const Segment> preds, std::span<const Segment> truths, std::span<const double> thresholds) {
    require(preds.size() == truths.size(), ErrorKind::dimension_mismatch,
            "evaluate: " + std::to_string(preds.size()) + " predictions for " + std::to_string(truths.size()) + " targets");
    require(!preds.empty(), ErrorKind::invalid_argument, "evaluate: no samples");
    EvalReport r;
    r.samples = preds.size();
    std::vector<std::size_t> hits(thresholds.size(), 0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double v = iou(preds[i], truths[i]);
        r.miou += v;
        for (std::size_t t = 0; t < thresholds.size(); ++t)
            if (v > thresholds[t]) ++hits[t];
    }
    r.miou /= static_cast<double>(r.samples);
    for (std::size_t t = 0; t < thresholds.size(); ++t)
        r.iou_at.emplace_back(thresholds[t], static_cast<double>(hits[t]) / static_cast<double>(r.samples));
    return r;
}

nlohmann::ordered_json to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["samples"] = r.samples;
    j["miou"] = r.miou;
    auto& at = j["iou_at"] = nlohmann::ordered_json::array();
    for (const auto& [t, v] : r.iou_at) at.push_back({{"threshold", t}, {"fraction", v}});
    return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
    EvalReport r;
    try {
        r.samples = j.at("samples").get<std::size_t>();
        r.miou = j.at("miou").get<double>();
        for (const auto& e : j.at("iou_at")) r.iou_at.emplace_back(e.at("threshold").get<double>(), e.at("fraction").get<double>());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("eval report: ") + e.what());
    }
    return r;
}

std::string render_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
    std::size_t width = 6;
    for (const auto& [name, r] : rows) width = std::max(width, name.size());
    std::vector<double> thresholds;
    if (!rows.empty())
        for (const auto& [t, v] : rows.front().second.iou_at) thresholds.push_back(t);

    char buf[64];
    std::string out = "Method" + std::string(width - 6, ' ');
    for (double t : thresholds) {
        std::snprintf(buf, sizeof buf, "  %9s", ("IoU@" + std::to_string(t).substr(0, 3)).c_str());
        out += buf;
    }
    out += "       mIoU\n";
    for (const auto& [name, r] : rows) {
        out += name + std::string(width - name.size(), ' ');
        for (double t : thresholds) {
            std::snprintf(buf, sizeof buf, "  %9.2f", 100.0 * r.at(t));
            out += buf;
        }
        std::snprintf(buf, sizeof buf, "  %9.2f\n", 100.0 * r.miou);
        out += buf;
    }
    return out;
}

Segment random_segment(Rng& rng, std::size_t n) {
    require(n >= 1, ErrorKind::invalid_argument, "random_segment: empty video");
    const long s = static_cast<long>(rng.uniform_int(1, n));
    const long e = static_cast<long>(rng.uniform_int(static_cast<std::uint64_t>(s), n));
    return {s, e};
}

std::vector<Segment> random_predictions(std::span<const VideoSample> samples, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Segment> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(random_segment(rng, s.length()));
    return out;
}

namespace {

std::vector<Segment> targets(std::span<const VideoSample> samples) {
    std::vector<Segment> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.target);
    return out;
}

}  // namespace

EvalReport random_baseline(std::span<const VideoSample> samples, std::uint64_t seed) {
    require(!samples.empty(), ErrorKind::invalid_argument, "random_baseline: empty dataset");
    return evaluate(random_predictions(samples, seed), targets(samples));
}

MonteCarloEstimate random_baseline_miou(std::span<const VideoSample> samples, std::uint64_t seed, std::size_t draws) {
    require(draws >= 2, ErrorKind::invalid_argument, "random_baseline_miou: need at least two draws");
    require(!samples.empty(), ErrorKind::invalid_argument, "random_baseline_miou: empty dataset");
    const auto truth = targets(samples);
    Rng seeds(seed);
    double sum = 0.0, sq = 0.0;
    for (std::size_t d = 0; d < draws; ++d) {
        const double m = evaluate(random_predictions(samples, seeds.next_u64()), truth).miou;
        sum += m;
        sq += m * m;
    }
    MonteCarloEstimate est;
    est.draws = draws;
    est.mean = sum / static_cast<double>(draws);
    const double var = std::max(0.0, (sq - sum * est.mean) / static_cast<double>(draws - 1));
    est.std_error = std::sqrt(var / static_cast<double>(draws));
    return est;
}

FrameScores::FrameScores(std::vector<double> log_in, std::vector<double> log_out) : n_(log_in.size()) {
    require(n_ >= 1 && log_out.size() == n_, ErrorKind::dimension_mismatch, "FrameScores: inside/outside logs differ in length");
    in_ = prefix(log_in);
    out_ = prefix(log_out);
}

FrameScores FrameScores::from_probabilities(std::span<const double> p) {
    std::vector<double> li(p.size()), lo(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        require(p[k] >= 0.0 && p[k] <= 1.0, ErrorKind::invalid_argument, "FrameScores: probability outside [0, 1]");
        li[k] = std::log(p[k]);
        lo[k] = std::log1p(-p[k]);
    }
    return FrameScores(std::move(li), std::move(lo));
}

FrameScores FrameScores::from_logits(std::span<const double> z) {
    // log sigmoid(z) = -softplus(-z), log(1 - sigmoid(z)) = -softplus(z)
    auto softplus = [](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); };
    std::vector<double> li(z.size()), lo(z.size());
    for (std::size_t k = 0; k < z.size(); ++k) {
        require(std::isfinite(z[k]), ErrorKind::non_finite, "FrameScores: non-finite logit");
        li[k] = -softplus(-z[k]);
        lo[k] = -softplus(z[k]);
    }
    return FrameScores(std::move(li), std::move(lo));
}

FrameScores::Prefix FrameScores::prefix(const std::vector<double>& logs) {
    Prefix p;
    p.sum.assign(logs.size() + 1, 0.0);
    p.zeros.assign(logs.size() + 1, 0);
    for (std::size_t k = 0; k < logs.size(); ++k) {
        const bool zero = std::isinf(logs[k]);
        p.sum[k + 1] = p.sum[k] + (zero ? 0.0 : logs[k]);
        p.zeros[k + 1] = p.zeros[k] + (zero ? 1 : 0);
    }
    return p;
}

double FrameScores::range(const Prefix& p, std::size_t begin, std::size_t end) {
    if (p.zeros[end] != p.zeros[begin]) return -INFINITY;
    return p.sum[end] - p.sum[begin];
}

double FrameScores::log_score(std::size_t s, std::size_t e) const {
    require(s >= 1 && s <= e && e <= n_, ErrorKind::invalid_argument, "FrameScores: segment outside the video");
    return range(out_, 0, s - 1) + range(in_, s - 1, e) + range(out_, e, n_);
}

Segment FrameScores::best() const {
    std::size_t bs = 1, be = 1;
    double best = log_score(1, 1);
    for (std::size_t s = 1; s <= n_; ++s)
        for (std::size_t e = s; e <= n_; ++e) {
            const double v = log_score(s, e);
            if (v > best) {
                best = v;
                bs = s;
                be = e;
            }
        }
    return {static_cast<long>(bs), static_cast<long>(be)};
}

FlpModel FlpModel::init(std::size_t frame_dim, std::size_t global_dim, const FlpConfig& cfg) {
    FlpModel m;
    m.cfg = cfg;
    Rng rng = Rng(cfg.seed).fork(0x464c50);
    add_weight(m.params, rng, "flp.query_proj", cfg.query_proj, global_dim);
    add_weight(m.params, rng, "flp.frame_in", cfg.hidden, frame_dim);
    add_weight(m.params, rng, "flp.query_in", cfg.hidden, cfg.query_proj);
    add_weight(m.params, rng, "flp.match_proj", frame_dim, global_dim);
    add_weight(m.params, rng, "flp.match_in", cfg.hidden, frame_dim);
    add_bias(m.params, "flp.hidden_bias", cfg.hidden);
    add_weight(m.params, rng, "flp.out", 1, cfg.hidden);
    add_bias(m.params, "flp.out_bias", 1);
    return m;
}

Var FlpModel::logits(Graph& g, const VideoSample& sample) const {
    Var frames = g.constant(sample.frames);
    Var global = g.constant(sample.query.global.reshaped({1, sample.query.global.size()}));
    Var q = ops::linear(ops::linear(global, g.param("flp.query_proj")), g.param("flp.query_in"));  // 1 x hidden
    // W [v; P f; v * M f] splits into a frame term, a broadcast query term and
    // a frame-query product term.
    Var h = ops::add_row(ops::linear(frames, g.param("flp.frame_in"), g.param("flp.hidden_bias")), ops::reshape(q, {cfg.hidden}));
    Var ones = g.constant(Tensor({sample.length(), 1}, std::vector<double>(sample.length(), 1.0)));
    Var match = ops::mul(frames, ops::matmul(ones, ops::linear(global, g.param("flp.match_proj"))));
    h = ops::add(h, ops::linear(match, g.param("flp.match_in")));
    return ops::linear(ops::tanh(h), g.param("flp.out"), g.param("flp.out_bias"));
}

std::vector<double> FlpModel::frame_logits(const VideoSample& sample) const {
    Graph g(params);
    const Tensor z = g.value(logits(g, sample));
    return {z.data().begin(), z.data().end()};
}

Segment FlpModel::predict(const VideoSample& sample) const { return FrameScores::from_logits(frame_logits(sample)).best(); }

Var flp_loss(Graph& g, const FlpModel& model, const VideoSample& sample) {
    const std::size_t n = sample.length();
    Var z = model.logits(g, sample);
    Tensor inside = Tensor::matrix(n, 1), outside = Tensor::matrix(n, 1);
    for (std::size_t k = 0; k < n; ++k) {
        const long pos = static_cast<long>(k) + 1;
        (pos >= sample.target.s && pos <= sample.target.e ? inside : outside)(k, 0) = 1.0;
    }
    constexpr double floor = 1e-12;
    Var log_p = ops::log_clamped(ops::sigmoid(z), floor);
    Var log_q = ops::log_clamped(ops::sigmoid(ops::scale(z, -1.0)), floor);
    Var ll = ops::add(ops::mul(log_p, g.constant(inside)), ops::mul(log_q, g.constant(outside)));
    return ops::scale(ops::sum(ll), -1.0 / static_cast<double>(n));
}

FlpModel train_flp(std::span<const VideoSample> train, const FlpConfig& cfg) {
    require(!train.empty(), ErrorKind::invalid_argument, "train_flp: empty training set");
    require(cfg.batch >= 1 && cfg.hidden >= 1 && cfg.query_proj >= 1, ErrorKind::config, "train_flp: batch and widths must be positive");
    FlpModel model = FlpModel::init(train.front().frames.cols(), train.front().query.global.size(), cfg);
    Adam adam(model.params, {cfg.lr});
    Rng order_rng = Rng(cfg.seed).fork(0x6f72646572);
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    const SampleLoss loss = [&](Graph& g, std::size_t i) { return flp_loss(g, model, train[i]); };
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
            const std::span<const std::size_t> batch(order.data() + b, std::min(cfg.batch, order.size() - b));
            const auto r = accumulate_batch(model.params, batch, loss);
            require(r.finite, ErrorKind::non_finite, "train_flp: non-finite loss at epoch " + std::to_string(epoch + 1));
            adam.step(model.params);
        }
    }
    return model;
}

void FlpConfig::validate() const {
    require(hidden >= 1 && query_proj >= 1, ErrorKind::config, "flp config: widths must be positive");
    require(std::isfinite(lr) && lr >= 0.0, ErrorKind::config, "flp config: lr must be finite and non-negative");
    require(batch >= 1, ErrorKind::config, "flp config: batch must be positive");
}

nlohmann::ordered_json to_json(const FlpConfig& c) {
    return {{"hidden", c.hidden}, {"query_proj", c.query_proj}, {"lr", c.lr},
            {"epochs", c.epochs}, {"batch", c.batch},           {"seed", c.seed}};
}

FlpConfig flp_config_from_json(const nlohmann::json& j) {
    require(j.is_object(), ErrorKind::config, "flp config must be a JSON object");
    FlpConfig c;
    const auto known = to_json(c);
    for (const auto& [key, value] : j.items()) require(known.contains(key), ErrorKind::config, "flp config: unknown key '" + key + "'");
    try {
        if (j.contains("hidden")) c.hidden = j.at("hidden").get<std::size_t>();
        if (j.contains("query_proj")) c.query_proj = j.at("query_proj").get<std::size_t>();
        if (j.contains("lr")) c.lr = j.at("lr").get<double>();
        if (j.contains("epochs")) c.epochs = j.at("epochs").get<std::size_t>();
        if (j.contains("batch")) c.batch = j.at("batch").get<std::size_t>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::config, std::string("flp config: ") + e.what());
    }
    c.validate();
    return c;
}

EvalReport flp_baseline(std::span<const VideoSample> train, std::span<const VideoSample> test, const FlpConfig& cfg) {
    require(!test.empty(), ErrorKind::invalid_argument, "flp_baseline: empty test set");
    const FlpModel model = train_flp(train, cfg);
    std::vector<Segment> preds;
    preds.reserve(test.size());
    for (const auto& s : test) preds.push_back(model.predict(s));
    return evaluate(preds, targets(test));
}

}  // namespace sail
