#include "sail/types.hpp"

#include "sail/error.hpp"

#include <algorithm>
#include <cmath>

namespace sail {

void ImageQuery::validate() const {
    require(!boxes.empty(), ErrorKind::invalid_argument, "image query needs at least one region");
    require(regions.rank() == 2 && regions.rows() == boxes.size(), ErrorKind::dimension_mismatch,
            "image query has " + std::to_string(boxes.size()) + " boxes but regions " + dims_string(regions.dims()));
    for (const auto& b : boxes)
        require(b.w > 0.0 && b.h > 0.0 && std::isfinite(b.x) && std::isfinite(b.y), ErrorKind::invalid_argument,
                "region box needs finite centre and positive width/height");
    require(!global.empty(), ErrorKind::invalid_argument, "image query has no global feature");
}

void VideoSample::validate() const {
    require(frames.rank() == 2 && frames.rows() >= 1, ErrorKind::invalid_argument, "sample " + id + " has no frames");
    const auto n = static_cast<long>(frames.rows());
    require(1 <= target.s && target.s <= target.e && target.e <= n, ErrorKind::invalid_argument,
            "sample " + id + " target (" + std::to_string(target.s) + "," + std::to_string(target.e) + ") outside [1," +
                std::to_string(n) + "]");
    query.validate();
}

const char* to_string(Difficulty d) { return d == Difficulty::simple ? "simple" : "difficult"; }

Difficulty difficulty_from_string(const std::string& s) {
    if (s == "simple") return Difficulty::simple;
    if (s == "difficult") return Difficulty::difficult;
    fail(ErrorKind::format, "unknown difficulty: " + s);
}

VideoSample downsample(const VideoSample& sample, std::size_t n_max) {
    const std::size_t n = sample.length();
    require(n_max >= 1, ErrorKind::invalid_argument, "n_max must be positive");
    if (n <= n_max) return sample;
    VideoSample out = sample;
    const std::size_t d = sample.frames.cols();
    out.frames = Tensor::matrix(n_max, d);
    for (std::size_t k = 0; k < n_max; ++k) {
        const std::size_t src = k * n / n_max;
        std::copy_n(sample.frames.ptr() + src * d, d, out.frames.ptr() + k * d);
    }
    auto remap = [&](long idx) {
        const long v = std::lround(static_cast<double>(idx) * static_cast<double>(n_max) / static_cast<double>(n));
        return std::clamp(v, 1L, static_cast<long>(n_max));
    };
    out.target = {remap(sample.target.s), remap(sample.target.e)};
    return out;
}

}  // namespace sail
