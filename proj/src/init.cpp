#include "sail/init.hpp"

#include <cmath>

namespace sail {

Tensor glorot_uniform(Rng& rng, std::size_t fan_out, std::size_t fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t = Tensor::matrix(fan_out, fan_in);
    for (auto& v : t.data()) v = rng.uniform(-limit, limit);
    return t;
}

void add_weight(ParamStore& ps, Rng& rng, const std::string& name, std::size_t out, std::size_t in) {
    ps.add(name, glorot_uniform(rng, out, in));
}

void add_vector_weight(ParamStore& ps, Rng& rng, const std::string& name, std::size_t n) {
    ps.add(name, glorot_uniform(rng, 1, n).reshaped({n}));
}

void add_bias(ParamStore& ps, const std::string& name, std::size_t n) { ps.add(name, Tensor({n}, 0.0)); }

void add_layer_norm(ParamStore& ps, const std::string& prefix, std::size_t n) {
    ps.add(prefix + ".gain", Tensor({n}, 1.0));
    ps.add(prefix + ".bias", Tensor({n}, 0.0));
}

}  // namespace sail
