#include "sail/optim.hpp"

#include "sail/error.hpp"

#include <cmath>

namespace sail {

Adam::Adam(const ParamStore& params, AdamConfig cfg) : cfg_(cfg), m_(params.zeros_like()), v_(params.zeros_like()) {}

void Adam::step(ParamStore& params) {
    require(params.size() == m_.size(), ErrorKind::dimension_mismatch, "optimizer state does not match parameter store");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto w = params.value(p).data();
        auto g = params.grad(p).data();
        auto m = m_[p].data();
        auto v = v_[p].data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            w[i] -= cfg_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
            g[i] = 0.0;
        }
    }
}

}  // namespace sail
