#pragma once

#include "sail/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sail {

/// Inclusive 1-based frame span. Ground truth has s <= e; a prediction with
/// e < s is an empty segment.
struct Segment {
    long s = 1;
    long e = 1;

    long length() const noexcept { return e >= s ? e - s + 1 : 0; }
    friend bool operator==(const Segment&, const Segment&) = default;
};

/// Region box as centre coordinates plus width and height.
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 1.0;
    double h = 1.0;
    friend bool operator==(const Box&, const Box&) = default;
};

struct ImageQuery {
    Tensor regions;  // m x d_r
    std::vector<Box> boxes;
    Tensor global;  // d_g

    std::size_t region_count() const noexcept { return boxes.size(); }
    /// Throws unless m >= 1, rows match boxes and every box has w, h > 0.
    void validate() const;
    friend bool operator==(const ImageQuery&, const ImageQuery&) = default;
};

enum class Difficulty { simple, difficult };

struct VideoSample {
    std::string id;
    Tensor frames;  // n x d_f
    Segment target;
    int class_id = 0;
    Difficulty difficulty = Difficulty::simple;
    ImageQuery query;

    std::size_t length() const noexcept { return frames.rows(); }
    void validate() const;
    friend bool operator==(const VideoSample&, const VideoSample&) = default;
};

const char* to_string(Difficulty d);
Difficulty difficulty_from_string(const std::string& s);

/// Uniform index striding to at most n_max frames. Boundaries are remapped
/// to round(s * n_max / n) clipped to [1, n_max]; order is preserved.
VideoSample downsample(const VideoSample& sample, std::size_t n_max);

}  // namespace sail
