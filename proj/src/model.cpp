#include "sail/model.hpp"

#include "sail/batch.hpp"
#include "sail/error.hpp"
#include "sail/kernels.hpp"
#include "sail/optim.hpp"
#include "sail/region_encoder.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace sail {

namespace {

const char* const region_prefix = "region";
const char* const localizer_prefix = "localizer";

std::string layer_prefix(std::size_t l) { return "video.layer" + std::to_string(l); }

template <class T>
void read_key(const nlohmann::json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

void SailConfig::validate() const {
    require(d_frame >= 2 && d_frame % 2 == 0, ErrorKind::config, "config: d_frame must be even and positive");
    require(d_region >= 1 && d_global >= 1 && d_ff >= 1 && d_attn >= 1, ErrorKind::config, "config: dimensions must be positive");
    require(heads >= 1 && d_model >= 1 && d_model % heads == 0, ErrorKind::config,
            "config: d_model (" + std::to_string(d_model) + ") must be a positive multiple of heads (" + std::to_string(heads) + ")");
    require(layers >= 1, ErrorKind::config, "config: need at least one encoder layer");
    require(std::isfinite(lr) && lr >= 0.0, ErrorKind::config, "config: lr must be finite and non-negative");
    require(batch >= 1, ErrorKind::config, "config: batch must be positive");
    require(n_max >= 1, ErrorKind::config, "config: n_max must be positive");
}

VideoEncoderConfig SailConfig::video_encoder() const {
    VideoEncoderConfig v;
    v.layers = layers;
    v.window = window;
    v.heads = heads;
    v.model = d_model;
    v.ffn = d_ff;
    v.multilevel_cross = !no_multilevel_cross;
    v.local = !no_local_attention;
    return v;
}

nlohmann::ordered_json to_json(const SailConfig& c) {
    return {{"d_frame", c.d_frame},
            {"d_region", c.d_region},
            {"d_global", c.d_global},
            {"d_model", c.d_model},
            {"heads", c.heads},
            {"layers", c.layers},
            {"window", c.window},
            {"d_ff", c.d_ff},
            {"d_attn", c.d_attn},
            {"lr", c.lr},
            {"batch", c.batch},
            {"epochs", c.epochs},
            {"seed", c.seed},
            {"n_max", c.n_max},
            {"no_region_self_attention", c.no_region_self_attention},
            {"no_multilevel_cross", c.no_multilevel_cross},
            {"no_local_attention", c.no_local_attention},
            {"no_bidirectional", c.no_bidirectional},
            {"decode", to_string(c.decode)}};
}

SailConfig sail_config_from_json(const nlohmann::json& j) {
    require(j.is_object(), ErrorKind::config, "model config must be a JSON object");
    SailConfig c;
    const auto known = to_json(c);
    for (const auto& [key, value] : j.items()) require(known.contains(key), ErrorKind::config, "model config: unknown key '" + key + "'");
    try {
        read_key(j, "d_frame", c.d_frame);
        read_key(j, "d_region", c.d_region);
        read_key(j, "d_global", c.d_global);
        read_key(j, "d_model", c.d_model);
        read_key(j, "heads", c.heads);
        read_key(j, "layers", c.layers);
        read_key(j, "window", c.window);
        read_key(j, "d_ff", c.d_ff);
        read_key(j, "d_attn", c.d_attn);
        read_key(j, "lr", c.lr);
        read_key(j, "batch", c.batch);
        read_key(j, "epochs", c.epochs);
        read_key(j, "seed", c.seed);
        read_key(j, "n_max", c.n_max);
        read_key(j, "no_region_self_attention", c.no_region_self_attention);
        read_key(j, "no_multilevel_cross", c.no_multilevel_cross);
        read_key(j, "no_local_attention", c.no_local_attention);
        read_key(j, "no_bidirectional", c.no_bidirectional);
        if (j.contains("decode")) c.decode = decode_mode_from_string(j.at("decode").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::config, std::string("model config: ") + e.what());
    }
    c.validate();
    return c;
}

SailModel::SailModel(const SailConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng rng = Rng(cfg_.seed).fork(0x696e6974);
    add_region_encoder_params(params_, rng, region_prefix, cfg_.d_region, cfg_.d_global);
    const auto vcfg = cfg_.video_encoder();
    for (std::size_t l = 0; l < cfg_.layers; ++l) add_encoder_layer_params(params_, rng, layer_prefix(l), cfg_.d_frame, cfg_.d_region, vcfg);
    add_localizer_params(params_, rng, localizer_prefix, cfg_.d_frame, cfg_.d_attn);
}

SailModel::SailModel(const SailConfig& cfg, ParamStore params) : SailModel(cfg) {
    require(params.names() == params_.names(), ErrorKind::format, "parameter set does not match the configured model");
    for (std::size_t i = 0; i < params.size(); ++i)
        require(params.value(i).dims() == params_.value(i).dims(), ErrorKind::format,
                "parameter " + params.name(i) + " has shape " + dims_string(params.value(i).dims()) + ", expected " +
                    dims_string(params_.value(i).dims()));
    params_ = std::move(params);
}

void SailModel::check_sample(const VideoSample& s) const {
    require(s.frames.rank() == 2 && s.frames.cols() == cfg_.d_frame, ErrorKind::dimension_mismatch,
            "video encoder: sample " + s.id + " frames " + dims_string(s.frames.dims()) + ", expected width " + std::to_string(cfg_.d_frame));
    require(s.query.regions.rank() == 2 && s.query.regions.cols() == cfg_.d_region, ErrorKind::dimension_mismatch,
            "region encoder: sample " + s.id + " regions " + dims_string(s.query.regions.dims()) + ", expected width " +
                std::to_string(cfg_.d_region));
    require(s.query.global.size() == cfg_.d_global, ErrorKind::dimension_mismatch,
            "region encoder: sample " + s.id + " global feature " + dims_string(s.query.global.dims()) + ", expected " +
                std::to_string(cfg_.d_global));
    require(s.length() <= cfg_.n_max, ErrorKind::invalid_argument,
            "sample " + s.id + " has " + std::to_string(s.length()) + " frames, more than n_max; downsample first");
    s.validate();
}

ModelOutput SailModel::forward(Graph& g, const VideoSample& sample) const {
    check_sample(sample);
    const Var regions = encode_regions(g, sample.query, bind_region_encoder(g, region_prefix), !cfg_.no_region_self_attention);
    std::vector<EncoderLayerParams> layers;
    for (std::size_t l = 0; l < cfg_.layers; ++l) layers.push_back(bind_encoder_layer(g, layer_prefix(l), cfg_.heads));
    const Var video = encode_video(g.constant(sample.frames), regions, layers, cfg_.video_encoder());
    const auto dist = localize(video, bind_localizer(g, localizer_prefix), !cfg_.no_bidirectional);
    return {dist.start, dist.end};
}

Var SailModel::loss(Graph& g, const VideoSample& sample) const {
    const auto out = forward(g, sample);
    return sample_nll(out.p_start, out.p_end, sample.target);
}

BoundaryPrediction SailModel::predict(const VideoSample& sample) const {
    const VideoSample s = downsample(sample, cfg_.n_max);
    Graph g(params_);
    const auto out = forward(g, s);
    BoundaryPrediction p;
    p.p_start.assign(out.p_start.value().data().begin(), out.p_start.value().data().end());
    p.p_end.assign(out.p_end.value().data().begin(), out.p_end.value().data().end());
    p.segment = predict_boundaries(p.p_start, p.p_end, cfg_.decode);
    return p;
}

std::vector<Segment> SailModel::predict_all(std::span<const VideoSample> samples) const {
    std::vector<Segment> out(samples.size());
    std::vector<std::exception_ptr> errors(samples.size());
    const int workers = kernels::threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers) if (workers > 1)
    for (std::size_t i = 0; i < samples.size(); ++i) {
        try {
            out[i] = predict(samples[i]).segment;
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

EvalReport SailModel::evaluate(std::span<const VideoSample> samples) const {
    const auto preds = predict_all(samples);
    std::vector<Segment> truth;
    truth.reserve(samples.size());
    for (const auto& s : samples) truth.push_back(downsample(s, cfg_.n_max).target);
    return sail::evaluate(preds, truth);
}

std::vector<VideoSample> downsample_all(std::span<const VideoSample> samples, std::size_t n_max) {
    std::vector<VideoSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(downsample(s, n_max));
    return out;
}

nlohmann::ordered_json to_json(const TrainLog& log) {
    nlohmann::ordered_json j;
    j["seed"] = log.seed;
    j["best_epoch"] = log.best_epoch;
    j["best_valid_miou"] = log.best_valid_miou;
    auto& epochs = j["epochs"] = nlohmann::ordered_json::array();
    for (const auto& e : log.epochs) {
        nlohmann::ordered_json r{{"epoch", e.epoch}, {"steps", e.steps}, {"train_loss", e.train_loss}};
        if (e.validated) r["valid"] = to_json(e.valid);
        epochs.push_back(std::move(r));
    }
    return j;
}

nlohmann::ordered_json timing_json(const TrainLog& log) {
    auto epochs = nlohmann::ordered_json::array();
    double total = 0.0;
    for (const auto& e : log.epochs) {
        epochs.push_back({{"epoch", e.epoch}, {"wall_seconds", e.wall_seconds}});
        total += e.wall_seconds;
    }
    return {{"total_seconds", total}, {"epochs", epochs}};
}

TrainResult train(std::span<const VideoSample> train_set, std::span<const VideoSample> valid_set, const SailConfig& cfg,
                  const TrainOptions& options) {
    require(!train_set.empty(), ErrorKind::invalid_argument, "train: empty training set");
    SailModel model(cfg);
    const auto train_data = downsample_all(train_set, cfg.n_max);
    for (const auto& s : train_data) model.check_sample(s);

    Adam adam(model.params(), {cfg.lr});
    Rng order_rng = Rng(cfg.seed).fork(0x73687566);
    std::vector<std::size_t> order(train_data.size());
    std::iota(order.begin(), order.end(), 0);
    const SampleLoss loss = [&](Graph& g, std::size_t i) { return model.loss(g, train_data[i]); };

    TrainResult result{model, {}};
    result.log.seed = cfg.seed;
    bool have_best = false;
    std::size_t steps = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        order_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
            if (options.max_steps != 0 && steps >= options.max_steps) break;
            const std::span<const std::size_t> batch(order.data() + b, std::min(cfg.batch, order.size() - b));
            const auto r = accumulate_batch(model.params(), batch, loss);
            require(r.finite, ErrorKind::non_finite,
                    "train: non-finite loss at epoch " + std::to_string(epoch) + ", step " + std::to_string(steps + 1));
            adam.step(model.params());
            loss_sum += r.loss;
            ++batches;
            ++steps;
        }
        if (batches == 0) break;
        EpochRecord rec;
        rec.epoch = epoch;
        rec.steps = steps;
        rec.train_loss = loss_sum / static_cast<double>(batches);
        if (!valid_set.empty()) {
            rec.validated = true;
            rec.valid = model.evaluate(valid_set);
            if (!have_best || rec.valid.miou > result.log.best_valid_miou) {
                have_best = true;
                result.log.best_epoch = epoch;
                result.log.best_valid_miou = rec.valid.miou;
                result.model = model;
            }
        }
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.log.epochs.push_back(rec);
        if (options.on_epoch) options.on_epoch(rec, model);
        if (options.stop_when && options.stop_when(rec)) break;
    }
    if (!have_best) {
        result.model = model;
        result.log.best_epoch = result.log.epochs.empty() ? 0 : result.log.epochs.back().epoch;
    }
    return result;
}

std::vector<ExperimentPoint> layer_grid(const SailConfig& base, std::span<const std::size_t> layers) {
    require(!layers.empty(), ErrorKind::config, "layer grid is empty");
    std::vector<ExperimentPoint> grid;
    for (std::size_t l : layers) {
        SailConfig c = base;
        c.layers = l;
        c.validate();
        grid.push_back({"layers=" + std::to_string(l), c});
    }
    return grid;
}

std::vector<ExperimentPoint> ablation_grid(const SailConfig& base) {
    std::vector<ExperimentPoint> grid{{"SAIL (full)", base}, {"w/o RS", base}, {"w/o ML", base}, {"w/o LS", base}, {"w/o BA", base}};
    grid[1].cfg.no_region_self_attention = true;
    grid[2].cfg.no_multilevel_cross = true;
    grid[3].cfg.no_local_attention = true;
    grid[4].cfg.no_bidirectional = true;
    return grid;
}

std::vector<ExperimentRow> run_experiment(const std::vector<ExperimentPoint>& grid, std::span<const VideoSample> train_set,
                                          std::span<const VideoSample> valid_set, std::span<const VideoSample> test_set,
                                          const std::function<void(const ExperimentRow&)>& on_row) {
    require(!grid.empty(), ErrorKind::config, "experiment grid is empty");
    std::vector<ExperimentRow> rows;
    for (const auto& point : grid) {
        auto result = train(train_set, valid_set, point.cfg);
        ExperimentRow row{point.name, point.cfg, result.model.evaluate(test_set), result.log.best_epoch, result.log.best_valid_miou};
        if (on_row) on_row(row);
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::ordered_json to_json(const std::vector<ExperimentRow>& rows) {
    auto out = nlohmann::ordered_json::array();
    for (const auto& r : rows)
        out.push_back({{"name", r.name},
                       {"config", to_json(r.cfg)},
                       {"best_epoch", r.best_epoch},
                       {"best_valid_miou", r.best_valid_miou},
                       {"test", to_json(r.test)}});
    return out;
}

}  // namespace sail
