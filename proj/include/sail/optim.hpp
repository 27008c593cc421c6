#pragma once

#include "sail/autodiff.hpp"

#include <cstdint>

namespace sail {

struct AdamConfig {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam. Moments are kept per parameter in store order.
class Adam {
public:
    Adam(const ParamStore& params, AdamConfig cfg);

    /// Applies one update from params' gradients, then clears them.
    void step(ParamStore& params);

    std::uint64_t steps() const noexcept { return t_; }
    const AdamConfig& config() const noexcept { return cfg_; }
    const Gradients& first_moment() const noexcept { return m_; }
    const Gradients& second_moment() const noexcept { return v_; }

private:
    AdamConfig cfg_;
    Gradients m_;
    Gradients v_;
    std::uint64_t t_ = 0;
};

}  // namespace sail
