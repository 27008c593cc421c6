#include "sail/video_encoder.hpp"

#include "sail/core.hpp"
#include "sail/error.hpp"
#include "sail/init.hpp"
#include "sail/ops.hpp"

#include <cmath>

namespace sail {

void add_encoder_layer_params(ParamStore& ps, Rng& rng, const std::string& prefix, std::size_t frame_dim, std::size_t region_dim,
                              const VideoEncoderConfig& cfg) {
    add_multi_head_params(ps, rng, prefix + ".self_attn", {frame_dim, frame_dim, frame_dim, cfg.model, frame_dim, cfg.heads});
    add_multi_head_params(ps, rng, prefix + ".cross_attn", {frame_dim, region_dim, region_dim, cfg.model, frame_dim, cfg.heads});
    add_weight(ps, rng, prefix + ".fusion.weight", frame_dim, 4 * frame_dim);
    add_bias(ps, prefix + ".fusion.bias", frame_dim);
    add_weight(ps, rng, prefix + ".ffn.w1", cfg.ffn, frame_dim);
    add_bias(ps, prefix + ".ffn.b1", cfg.ffn);
    add_weight(ps, rng, prefix + ".ffn.w2", frame_dim, cfg.ffn);
    add_bias(ps, prefix + ".ffn.b2", frame_dim);
    add_layer_norm(ps, prefix + ".norm1", frame_dim);
    add_layer_norm(ps, prefix + ".norm2", frame_dim);
    add_layer_norm(ps, prefix + ".norm3", frame_dim);
}

EncoderLayerParams bind_encoder_layer(Graph& g, const std::string& prefix, std::size_t heads) {
    EncoderLayerParams p;
    p.self_attn = bind_multi_head(g, prefix + ".self_attn", heads);
    p.cross_attn = bind_multi_head(g, prefix + ".cross_attn", heads);
    p.fusion_w = g.param(prefix + ".fusion.weight");
    p.fusion_b = g.param(prefix + ".fusion.bias");
    p.ffn_w1 = g.param(prefix + ".ffn.w1");
    p.ffn_b1 = g.param(prefix + ".ffn.b1");
    p.ffn_w2 = g.param(prefix + ".ffn.w2");
    p.ffn_b2 = g.param(prefix + ".ffn.b2");
    p.norm1_gain = g.param(prefix + ".norm1.gain");
    p.norm1_bias = g.param(prefix + ".norm1.bias");
    p.norm2_gain = g.param(prefix + ".norm2.gain");
    p.norm2_bias = g.param(prefix + ".norm2.bias");
    p.norm3_gain = g.param(prefix + ".norm3.gain");
    p.norm3_bias = g.param(prefix + ".norm3.bias");
    return p;
}

Tensor temporal_encoding(std::size_t n, std::size_t d) {
    require(n >= 1, ErrorKind::invalid_argument, "temporal_encoding: empty sequence");
    require(d >= 2 && d % 2 == 0, ErrorKind::config, "temporal_encoding: feature width must be even, got " + std::to_string(d));
    Tensor pe = Tensor::matrix(n, d);
    for (std::size_t k = 0; 2 * k < d; ++k) {
        const double freq = std::pow(10000.0, -static_cast<double>(2 * k) / static_cast<double>(d));
        for (std::size_t pos = 0; pos < n; ++pos) {
            pe(pos, 2 * k) = std::sin(static_cast<double>(pos) * freq);
            pe(pos, 2 * k + 1) = std::cos(static_cast<double>(pos) * freq);
        }
    }
    return pe;
}

Var fusion(Var a, Var b, Var weight, Var bias) {
    require(a.dims() == b.dims(), ErrorKind::dimension_mismatch,
            "fusion: " + dims_string(a.dims()) + " vs " + dims_string(b.dims()));
    Var joined = ops::concat_cols({a, b, ops::mul(a, b), ops::sub(a, b)});
    return ops::tanh(ops::linear(joined, weight, bias));
}

Var encoder_layer(Var frames, Var regions, const EncoderLayerParams& p, const VideoEncoderConfig& cfg, bool cross_attention) {
    Var attended = cfg.local ? local_multi_head(frames, cfg.window, p.self_attn) : multi_head(frames, frames, frames, p.self_attn);
    Var f1 = ops::layer_norm_rows(ops::add(attended, frames), p.norm1_gain, p.norm1_bias, layer_norm_eps);
    Var f2 = f1;
    if (cross_attention) {
        Var aware = multi_head(f1, regions, regions, p.cross_attn);
        f2 = ops::layer_norm_rows(fusion(f1, aware, p.fusion_w, p.fusion_b), p.norm2_gain, p.norm2_bias, layer_norm_eps);
    }
    Var ff = ops::linear(ops::relu(ops::linear(f2, p.ffn_w1, p.ffn_b1)), p.ffn_w2, p.ffn_b2);
    return ops::layer_norm_rows(ops::add(f2, ff), p.norm3_gain, p.norm3_bias, layer_norm_eps);
}

Var encode_video(Var frames, Var regions, const std::vector<EncoderLayerParams>& layers, const VideoEncoderConfig& cfg) {
    require(cfg.layers >= 1 && layers.size() == cfg.layers, ErrorKind::config,
            "encode_video: " + std::to_string(layers.size()) + " parameter sets for " + std::to_string(cfg.layers) + " layers");
    Graph& g = *frames.graph;
    Var f = ops::add(frames, g.constant(temporal_encoding(frames.rows(), frames.cols())));
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const bool cross = cfg.multilevel_cross || l + 1 == layers.size();
        f = encoder_layer(f, regions, layers[l], cfg, cross);
    }
    return f;
}

}  // namespace sail
