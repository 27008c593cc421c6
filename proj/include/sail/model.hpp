#pragma once

#include "sail/autodiff.hpp"
#include "sail/eval.hpp"
#include "sail/localizer.hpp"
#include "sail/types.hpp"
#include "sail/video_encoder.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sail {

struct SailConfig {
    std::size_t d_frame = 32;
    std::size_t d_region = 32;
    std::size_t d_global = 32;
    std::size_t d_model = 32;  // attention projection width
    std::size_t heads = 4;
    std::size_t layers = 2;
    std::size_t window = 16;
    std::size_t d_ff = 128;
    std::size_t d_attn = 32;  // additive attention and boundary head width
    double lr = 5e-4;
    std::size_t batch = 16;
    std::size_t epochs = 6;
    std::uint64_t seed = 7;
    std::size_t n_max = 200;
    bool no_region_self_attention = false;
    bool no_multilevel_cross = false;
    bool no_local_attention = false;
    bool no_bidirectional = false;
    DecodeMode decode = DecodeMode::independent;

    void validate() const;
    VideoEncoderConfig video_encoder() const;
    friend bool operator==(const SailConfig&, const SailConfig&) = default;
};

nlohmann::ordered_json to_json(const SailConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
SailConfig sail_config_from_json(const nlohmann::json& j);

struct ModelOutput {
    Var p_start;  // 1 x n
    Var p_end;    // 1 x n
};

class SailModel {
public:
    /// Fan-based uniform weights, zero biases, unit layer-norm gains, all
    /// drawn from cfg.seed.
    explicit SailModel(const SailConfig& cfg);
    SailModel(const SailConfig& cfg, ParamStore params);

    const SailConfig& config() const noexcept { return cfg_; }
    ParamStore& params() noexcept { return params_; }
    const ParamStore& params() const noexcept { return params_; }

    /// Builds the forward pass; the sample must already fit in n_max frames.
    ModelOutput forward(Graph& g, const VideoSample& sample) const;
    Var loss(Graph& g, const VideoSample& sample) const;

    /// Downsamples to n_max when needed; boundaries refer to the
    /// (possibly downsampled) frame indices.
    BoundaryPrediction predict(const VideoSample& sample) const;
    std::vector<Segment> predict_all(std::span<const VideoSample> samples) const;
    EvalReport evaluate(std::span<const VideoSample> samples) const;

    /// Rejects samples whose dims do not match the config, naming the
    /// component that would consume them.
    void check_sample(const VideoSample& s) const;

private:

    SailConfig cfg_;
    ParamStore params_;
};

std::vector<VideoSample> downsample_all(std::span<const VideoSample> samples, std::size_t n_max);

struct EpochRecord {
    std::size_t epoch = 0;
    std::size_t steps = 0;  // cumulative optimizer steps
    double train_loss = 0.0;
    bool validated = false;
    EvalReport valid;
    double wall_seconds = 0.0;
};

struct TrainLog {
    std::uint64_t seed = 0;
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_valid_miou = 0.0;
};

/// Deterministic part of the log (no wall-clock), byte-stable across reruns.
nlohmann::ordered_json to_json(const TrainLog& log);
nlohmann::ordered_json timing_json(const TrainLog& log);

struct TrainOptions {
    /// Stop after this many optimizer steps (0: run every epoch).
    std::size_t max_steps = 0;
    /// Called after every epoch with the current (not the best) model.
    std::function<void(const EpochRecord&, const SailModel&)> on_epoch;
    /// Ends training after the epoch for which it returns true.
    std::function<bool(const EpochRecord&)> stop_when;
};

struct TrainResult {
    SailModel model;  // best validation epoch, or the last one without validation data
    TrainLog log;
};

/// Mini-batch Adam on the mean boundary NLL with seeded shuffling.
TrainResult train(std::span<const VideoSample> train_set, std::span<const VideoSample> valid_set, const SailConfig& cfg,
                  const TrainOptions& options = {});

struct ExperimentPoint {
    std::string name;
    SailConfig cfg;
};

struct ExperimentRow {
    std::string name;
    SailConfig cfg;
    EvalReport test;
    std::size_t best_epoch = 0;
    double best_valid_miou = 0.0;
};

/// Layer-count sweep, one point per count.
std::vector<ExperimentPoint> layer_grid(const SailConfig& base, std::span<const std::size_t> layers);
/// full, w/o RS, w/o ML, w/o LS, w/o BA.
std::vector<ExperimentPoint> ablation_grid(const SailConfig& base);

std::vector<ExperimentRow> run_experiment(const std::vector<ExperimentPoint>& grid, std::span<const VideoSample> train_set,
                                          std::span<const VideoSample> valid_set, std::span<const VideoSample> test_set,
                                          const std::function<void(const ExperimentRow&)>& on_row = {});

nlohmann::ordered_json to_json(const std::vector<ExperimentRow>& rows);

}  // namespace sail
