#pragma once

#include "sail/autodiff.hpp"
#include "sail/rng.hpp"
#include "sail/types.hpp"

#include <array>
#include <string>

namespace sail {

/// ((x_i - x_j) / w_j, (y_i - y_j) / h_j, log(w_i / w_j), log(h_i / h_j)).
std::array<double, 4> relative_position(const Box& i, const Box& j);

/// (m*m) x 4 table; row i*m + j holds relative_position(boxes[i], boxes[j]).
Tensor relative_position_table(const std::vector<Box>& boxes);

struct RegionEncoderParams {
    Var position_proj;  // d_r x 4
    Var global_proj;    // d_r x d_g
    Var norm_gain;
    Var norm_bias;
};

void add_region_encoder_params(ParamStore& ps, Rng& rng, const std::string& prefix, std::size_t region_dim, std::size_t global_dim);
RegionEncoderParams bind_region_encoder(Graph& g, const std::string& prefix);

/// Row i = softmax(r_i (R + P_i)^T / sqrt(d_r)) (R + P_i), where row j of P_i
/// is position_proj * p_ij. Keys and values are both position-augmented.
Var region_self_atten(Var regions, const Tensor& relative_table, Var position_proj);

/// LayerNorm(region_self_atten(R) + R + global_proj * f_g) per region. With
/// self_attention off the attention term is dropped.
Var encode_regions(Graph& g, const ImageQuery& q, const RegionEncoderParams& p, bool self_attention = true);

}  // namespace sail
