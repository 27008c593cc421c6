#pragma once

#include "sail/autodiff.hpp"
#include "sail/rng.hpp"
#include "sail/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sail {

/// Inclusive-index IoU. A prediction with e < s is empty and scores 0.
double iou(const Segment& pred, const Segment& truth);

inline const std::vector<double> default_thresholds{0.3, 0.5, 0.7};

struct EvalReport {
    double miou = 0.0;
    std::vector<std::pair<double, double>> iou_at;  // (R, fraction with IoU > R)
    std::size_t samples = 0;

    double at(double threshold) const;
    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

EvalReport evaluate(std::span<const Segment> preds, std::span<const Segment> truths,
                    std::span<const double> thresholds = default_thresholds);

nlohmann::ordered_json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);
/// Aligned rows "method  IoU@0.3  IoU@0.5  IoU@0.7  mIoU" in percent.
std::string render_table(const std::vector<std::pair<std::string, EvalReport>>& rows);

/// Start uniform in [1, n], end uniform in [start, n].
Segment random_segment(Rng& rng, std::size_t n);
std::vector<Segment> random_predictions(std::span<const VideoSample> samples, std::uint64_t seed);
EvalReport random_baseline(std::span<const VideoSample> samples, std::uint64_t seed);

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t draws = 0;
};

/// mIoU of the random baseline averaged over `draws` independent seeds.
MonteCarloEstimate random_baseline_miou(std::span<const VideoSample> samples, std::uint64_t seed, std::size_t draws);

/// Segment scores prod_{k<i}(1-p_k) prod_{i<=k<=j} p_k prod_{k>j}(1-p_k)
/// in log space from per-frame log p_k and log(1-p_k); -inf entries allowed.
class FrameScores {
public:
    FrameScores(std::vector<double> log_in, std::vector<double> log_out);
    static FrameScores from_probabilities(std::span<const double> p);
    static FrameScores from_logits(std::span<const double> z);

    std::size_t size() const noexcept { return n_; }
    /// Log score of the 1-based inclusive segment (s, e), s <= e.
    double log_score(std::size_t s, std::size_t e) const;
    /// Highest-scoring segment; ties go to the smallest (s, e).
    Segment best() const;

private:
    struct Prefix {
        std::vector<double> sum;         // finite terms
        std::vector<std::size_t> zeros;  // -inf terms
    };
    static Prefix prefix(const std::vector<double>& logs);
    static double range(const Prefix& p, std::size_t begin, std::size_t end);

    std::size_t n_ = 0;
    Prefix in_;
    Prefix out_;
};

struct FlpConfig {
    std::size_t hidden = 32;
    std::size_t query_proj = 16;
    double lr = 1e-3;
    std::size_t epochs = 10;
    std::size_t batch = 16;
    std::uint64_t seed = 7;

    void validate() const;
    friend bool operator==(const FlpConfig&, const FlpConfig&) = default;
};

nlohmann::ordered_json to_json(const FlpConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
FlpConfig flp_config_from_json(const nlohmann::json& j);

/// Per-frame scorer sigmoid(w . tanh(W [v_i; P f_g; v_i * M f_g] + b) + c).
struct FlpModel {
    FlpConfig cfg;
    ParamStore params;

    static FlpModel init(std::size_t frame_dim, std::size_t global_dim, const FlpConfig& cfg);
    /// n x 1 pre-sigmoid scores.
    Var logits(Graph& g, const VideoSample& sample) const;
    std::vector<double> frame_logits(const VideoSample& sample) const;
    Segment predict(const VideoSample& sample) const;
};

/// Mean per-frame binary cross-entropy against the inside-segment indicator.
Var flp_loss(Graph& g, const FlpModel& model, const VideoSample& sample);

FlpModel train_flp(std::span<const VideoSample> train, const FlpConfig& cfg);
EvalReport flp_baseline(std::span<const VideoSample> train, std::span<const VideoSample> test, const FlpConfig& cfg);

}  // namespace sail
