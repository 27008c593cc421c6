#pragma once

#include "sail/attention.hpp"
#include "sail/autodiff.hpp"
#include "sail/rng.hpp"

#include <string>
#include <vector>

namespace sail {

struct VideoEncoderConfig {
    std::size_t layers = 2;
    std::size_t window = 16;
    std::size_t heads = 4;
    std::size_t model = 32;  // attention projection width
    std::size_t ffn = 128;
    /// Cross-attention over regions in every layer; when false only the last
    /// layer keeps it.
    bool multilevel_cross = true;
    /// Windowed self-attention; when false every frame attends globally.
    bool local = true;
};

struct EncoderLayerParams {
    MultiHeadParams self_attn;
    MultiHeadParams cross_attn;
    Var fusion_w;  // d_f x 4*d_f
    Var fusion_b;
    Var ffn_w1;  // d_ff x d_f
    Var ffn_b1;
    Var ffn_w2;  // d_f x d_ff
    Var ffn_b2;
    Var norm1_gain, norm1_bias;
    Var norm2_gain, norm2_bias;
    Var norm3_gain, norm3_bias;
};

void add_encoder_layer_params(ParamStore& ps, Rng& rng, const std::string& prefix, std::size_t frame_dim, std::size_t region_dim,
                              const VideoEncoderConfig& cfg);
EncoderLayerParams bind_encoder_layer(Graph& g, const std::string& prefix, std::size_t heads);

/// Sinusoidal encoding, n x d: (2k, 2k+1) = (sin, cos)(pos / 10000^(2k/d)),
/// pos counted from 0. d must be even.
Tensor temporal_encoding(std::size_t n, std::size_t d);

/// tanh(W [a; b; a*b; a-b] + bias) per row.
Var fusion(Var a, Var b, Var weight, Var bias);

/// One layer: windowed self-attention, optional cross-attention over the
/// region representations with fusion, then the position-wise feed-forward
/// block; each sublayer ends in a layer norm.
Var encoder_layer(Var frames, Var regions, const EncoderLayerParams& p, const VideoEncoderConfig& cfg, bool cross_attention);

/// Adds the temporal encoding once, then runs cfg.layers encoder layers.
Var encode_video(Var frames, Var regions, const std::vector<EncoderLayerParams>& layers, const VideoEncoderConfig& cfg);

}  // namespace sail
