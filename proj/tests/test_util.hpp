#pragma once

#include "sail/rng.hpp"
#include "sail/tensor.hpp"
#include "sail/types.hpp"

#include <cmath>
#include <vector>

namespace sail::test {

inline Tensor random_tensor(Rng& rng, std::vector<std::size_t> dims, double scale = 1.0) {
    Tensor t(std::move(dims));
    for (auto& v : t.data()) v = scale * rng.normal();
    return t;
}

inline Tensor identity(std::size_t n) {
    Tensor t = Tensor::matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

inline double row_sum(const Tensor& t, std::size_t r) {
    double s = 0.0;
    for (double v : t.row(r)) s += v;
    return s;
}

/// Random sample with the target frames shifted towards a direction shared
/// with the query's global feature, so it is learnable.
inline VideoSample planted_sample(Rng& rng, std::size_t n, std::size_t d, std::size_t m, Segment target, double signal = 2.0) {
    VideoSample v;
    v.id = "t" + std::to_string(rng.next_u64() % 100000);
    v.frames = random_tensor(rng, {n, d}, 0.5);
    v.target = target;
    Tensor dir = random_tensor(rng, {d});
    for (long i = target.s; i <= target.e; ++i)
        for (std::size_t c = 0; c < d; ++c) v.frames(static_cast<std::size_t>(i - 1), c) += signal * dir[c];
    v.query.regions = random_tensor(rng, {m, d});
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < d; ++c) v.query.regions(r, c) += dir[c];
        v.query.boxes.push_back({rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0.1, 0.5), rng.uniform(0.1, 0.5)});
    }
    v.query.global = dir;
    return v;
}

}  // namespace sail::test
