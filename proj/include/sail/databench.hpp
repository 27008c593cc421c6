#pragma once

#include "sail/rng.hpp"
#include "sail/tensor.hpp"
#include "sail/types.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace sail {

struct GeneratorConfig {
    std::size_t classes = 40;  // arranged as classes/2 sibling pairs
    std::size_t videos_per_class = 10;
    std::size_t min_frames = 40;
    std::size_t max_frames = 160;
    std::size_t feature_dim = 32;  // frames, regions and global feature
    std::size_t latent_dim = 16;   // class signature space
    std::size_t min_regions = 4;
    std::size_t max_regions = 10;
    std::size_t prototypes = 4;    // region prototypes per class
    double sibling_correlation = 0.6;
    double prototype_spread = 0.4;
    double frame_noise = 0.7;
    double region_noise = 0.5;
    double global_noise = 2.0;
    double min_segment_ratio = 0.15;
    double max_segment_ratio = 0.48;
    double second_segment_prob = 0.3;
    double distractor_prob = 0.8;  // background chunks holding another class
    std::size_t min_len = 8;
    std::size_t max_len = 120;

    void validate() const;
};

nlohmann::ordered_json to_json(const GeneratorConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

struct ActivityClass {
    int id = 0;
    int parent = 0;
    int sibling = 0;
    Tensor signature;                // latent_dim, unit norm
    std::vector<Tensor> prototypes;  // latent_dim each, unit norm
};

struct LabelledSegment {
    int label = 0;
    Segment span;
    friend bool operator==(const LabelledSegment&, const LabelledSegment&) = default;
};

struct RawVideo {
    std::string id;
    Tensor frames;  // n x feature_dim
    std::vector<LabelledSegment> segments;
};

struct RawCorpus {
    std::vector<ActivityClass> classes;
    Tensor projection;  // feature_dim x latent_dim, shared by frames and regions
    std::vector<RawVideo> videos;
};

/// Planted-activity corpus. Each video holds 1-2 spans of its own class; the
/// rest is tiled with chunks that carry (with probability distractor_prob) a
/// class from another parent of the same default split, or nothing. Frames are noise plus
/// projection * signature of the chunk's class.
RawCorpus generate_raw_corpus(const GeneratorConfig& cfg, std::uint64_t seed);

/// Merges overlapping or touching same-label segments to a fixed point.
/// Output is sorted by (label, start).
std::vector<LabelledSegment> merge_segments(std::vector<LabelledSegment> segments);

struct CuratedVideo {
    std::string id;
    Tensor frames;
    int label = 0;
    Segment target;
};

/// Merge, split into one copy per segment, and drop targets whose length
/// is outside [min_len, max_len].
std::vector<CuratedVideo> curate(const std::vector<RawVideo>& raw, std::size_t min_len, std::size_t max_len);

struct QueryStats {
    std::size_t skipped_classes = 0;
};

/// Three simple samples (query from the video's class) and two difficult
/// samples (query from its sibling) per video.
std::vector<VideoSample> make_queries(const std::vector<CuratedVideo>& videos, const RawCorpus& corpus, const GeneratorConfig& cfg,
                                      std::uint64_t seed, QueryStats* stats = nullptr);

struct SplitStats {
    std::size_t samples = 0;
    std::vector<int> classes;
    double mean_video_length = 0.0;
    double mean_target_length = 0.0;
    friend bool operator==(const SplitStats&, const SplitStats&) = default;
};

struct CorpusManifest {
    std::uint64_t seed = 0;
    SplitStats train, valid, test;
    std::size_t skipped_classes = 0;
    friend bool operator==(const CorpusManifest&, const CorpusManifest&) = default;
};

nlohmann::ordered_json to_json(const CorpusManifest& m);

struct Splits {
    std::vector<VideoSample> train;
    std::vector<VideoSample> valid;
    std::vector<VideoSample> test;
    CorpusManifest manifest;
};

inline constexpr std::array<std::size_t, 3> default_split_ratios{8, 1, 1};

/// Parent id -> split (0 train, 1 valid, 2 test), shuffled by seed.
std::map<int, int> assign_parent_splits(const std::vector<ActivityClass>& classes, std::array<std::size_t, 3> ratios, std::uint64_t seed);

/// Assigns whole parent classes (both siblings) to train/valid/test in the
/// given ratio.
Splits split_by_class(std::vector<VideoSample> samples, const std::vector<ActivityClass>& classes, std::array<std::size_t, 3> ratios,
                      std::uint64_t seed);

/// generate -> curate -> queries -> split, with features rounded to the
/// corpus file precision.
Splits synthesize(const GeneratorConfig& cfg, std::uint64_t seed);

inline constexpr double feature_quantum = 1e-4;
double quantize(double v);
void quantize(VideoSample& s);

/// One JSON object per line: {id, split, class, difficulty, n, frames,
/// regions, boxes, global, s, e}.
void write_corpus(const std::filesystem::path& path, const Splits& splits);
Splits read_corpus(const std::filesystem::path& path);
nlohmann::ordered_json sample_to_json(const VideoSample& s, const std::string& split);
VideoSample sample_from_json(const nlohmann::json& j);

SplitStats split_stats(const std::vector<VideoSample>& samples);

}  // namespace sail
