#pragma once

#include "sail/autodiff.hpp"
#include "sail/rng.hpp"

#include <string>

namespace sail {

/// Uniform(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))), out x in.
Tensor glorot_uniform(Rng& rng, std::size_t fan_out, std::size_t fan_in);

// Registration helpers; every draw comes from `rng` in call order.
void add_weight(ParamStore& ps, Rng& rng, const std::string& name, std::size_t out, std::size_t in);
/// A length-n scoring vector, initialised as a 1 x n weight.
void add_vector_weight(ParamStore& ps, Rng& rng, const std::string& name, std::size_t n);
void add_bias(ParamStore& ps, const std::string& name, std::size_t n);
void add_layer_norm(ParamStore& ps, const std::string& prefix, std::size_t n);

}  // namespace sail
