#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace sail {

/// Counter-based generator: draw k is a SplitMix64 finalizer applied to
/// seed + k * golden-gamma, so the sequence depends only on (seed, counter)
/// and is identical across platforms. Real-valued draws avoid the
/// implementation-defined std distributions for the same reason.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0, std::uint64_t counter = 0) : seed_(seed), counter_(counter) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept;
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept;
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [lo, hi], inclusive. Rejection sampling, no modulo bias.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;
    std::size_t index(std::size_t n) noexcept { return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1)); }
    double normal() noexcept;
    double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }
    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Independent stream keyed by `key`; used for per-item derived seeds.
    Rng fork(std::uint64_t key) const noexcept;

    template <class T>
    void shuffle(std::vector<T>& v) noexcept {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace sail
