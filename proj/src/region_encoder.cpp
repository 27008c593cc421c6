#include "sail/region_encoder.hpp"

#include "sail/core.hpp"
#include "sail/error.hpp"
#include "sail/init.hpp"
#include "sail/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace sail {

std::array<double, 4> relative_position(const Box& i, const Box& j) {
    require(i.w > 0.0 && i.h > 0.0 && j.w > 0.0 && j.h > 0.0, ErrorKind::invalid_argument,
            "relative_position: box width and height must be positive");
    return {(i.x - j.x) / j.w, (i.y - j.y) / j.h, std::log(i.w / j.w), std::log(i.h / j.h)};
}

Tensor relative_position_table(const std::vector<Box>& boxes) {
    const std::size_t m = boxes.size();
    require(m >= 1, ErrorKind::invalid_argument, "relative_position_table: no boxes");
    Tensor t = Tensor::matrix(m * m, 4);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const auto r = relative_position(boxes[i], boxes[j]);
            std::copy(r.begin(), r.end(), t.row(i * m + j).begin());
        }
    return t;
}

void add_region_encoder_params(ParamStore& ps, Rng& rng, const std::string& prefix, std::size_t region_dim, std::size_t global_dim) {
    add_weight(ps, rng, prefix + ".position_proj", region_dim, 4);
    add_weight(ps, rng, prefix + ".global_proj", region_dim, global_dim);
    add_layer_norm(ps, prefix + ".norm", region_dim);
}

RegionEncoderParams bind_region_encoder(Graph& g, const std::string& prefix) {
    return {g.param(prefix + ".position_proj"), g.param(prefix + ".global_proj"), g.param(prefix + ".norm.gain"),
            g.param(prefix + ".norm.bias")};
}

namespace {

// Sums in ascending order of the terms, so any permutation of the same
// multiset of terms gives a bit-identical result.
double canonical_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
}

}  // namespace

Var region_self_atten(Var regions, const Tensor& relative_table, Var position_proj) {
    const std::size_t m = regions.rows(), d = regions.cols();
    require(relative_table.rows() == m * m && relative_table.cols() == 4, ErrorKind::dimension_mismatch,
            "region_self_atten: relative table " + dims_string(relative_table.dims()) + " for " + std::to_string(m) + " regions");
    Graph& g = *regions.graph;
    Var projected = ops::linear(g.constant(relative_table), position_proj);  // (m*m) x d
    const Tensor& R = g.value(regions);
    const Tensor& P = g.value(projected);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    // keys[i*m + j] = r_j + P[i*m + j]; weights[i*m + j] = softmax_j of r_i . keys / sqrt(d).
    auto keys = std::make_shared<Tensor>(Tensor::matrix(m * m, d));
    auto weights = std::make_shared<std::vector<double>>(m * m);
    Tensor out = Tensor::matrix(m, d);
    std::vector<double> terms(m);
    for (std::size_t i = 0; i < m; ++i) {
        double mx = -INFINITY;
        for (std::size_t j = 0; j < m; ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
                const double k = R(j, c) + P(i * m + j, c);
                (*keys)(i * m + j, c) = k;
                dot += R(i, c) * k;
            }
            (*weights)[i * m + j] = dot * scale;
            mx = std::max(mx, dot * scale);
        }
        for (std::size_t j = 0; j < m; ++j) terms[j] = (*weights)[i * m + j] = std::exp((*weights)[i * m + j] - mx);
        const double z = canonical_sum(terms);
        for (std::size_t j = 0; j < m; ++j) (*weights)[i * m + j] /= z;
        for (std::size_t c = 0; c < d; ++c) {
            for (std::size_t j = 0; j < m; ++j) terms[j] = (*weights)[i * m + j] * (*keys)(i * m + j, c);
            out(i, c) = canonical_sum(terms);
        }
    }
    return g.record(std::move(out), {regions.id, projected.id},
                    [keys, weights, m, d, scale, ir = regions.id, ip = projected.id](Graph& gr, std::size_t self) {
                        const Tensor& go = gr.grad_mut(self);
                        const Tensor& R = gr.value(ir);
                        Tensor dkeys = Tensor::matrix(m * m, d);
                        Tensor dr = Tensor::matrix(m, d);
                        for (std::size_t i = 0; i < m; ++i) {
                            std::vector<double> dp(m);
                            double dot = 0.0;
                            for (std::size_t j = 0; j < m; ++j) {
                                const double p = (*weights)[i * m + j];
                                for (std::size_t c = 0; c < d; ++c) {
                                    dp[j] += go(i, c) * (*keys)(i * m + j, c);
                                    dkeys(i * m + j, c) += p * go(i, c);
                                }
                                dot += p * dp[j];
                            }
                            for (std::size_t j = 0; j < m; ++j) {
                                const double ds = (*weights)[i * m + j] * (dp[j] - dot) * scale;
                                for (std::size_t c = 0; c < d; ++c) {
                                    dr(i, c) += ds * (*keys)(i * m + j, c);
                                    dkeys(i * m + j, c) += ds * R(i, c);
                                }
                            }
                        }
                        if (gr.needs_grad(ip)) {
                            Tensor& gp = gr.grad_mut(ip);
                            for (std::size_t k = 0; k < gp.size(); ++k) gp[k] += dkeys[k];
                        }
                        if (gr.needs_grad(ir)) {
                            Tensor& grr = gr.grad_mut(ir);
                            for (std::size_t i = 0; i < m; ++i)
                                for (std::size_t j = 0; j < m; ++j)
                                    for (std::size_t c = 0; c < d; ++c) grr(j, c) += dkeys(i * m + j, c);
                            for (std::size_t k = 0; k < grr.size(); ++k) grr[k] += dr[k];
                        }
                    });
}

Var encode_regions(Graph& g, const ImageQuery& q, const RegionEncoderParams& p, bool self_attention) {
    q.validate();
    const std::size_t d = q.regions.cols();
    require(p.global_proj.rows() == d && p.global_proj.cols() == q.global.size(), ErrorKind::dimension_mismatch,
            "region encoder: global projection " + dims_string(p.global_proj.dims()) + " for regions of width " + std::to_string(d) +
                " and global feature of width " + std::to_string(q.global.size()));
    Var regions = g.constant(q.regions);
    Var global = ops::reshape(ops::linear(g.constant(q.global.reshaped({1, q.global.size()})), p.global_proj), {d});
    Var sum = regions;
    if (self_attention) sum = ops::add(region_self_atten(regions, relative_position_table(q.boxes), p.position_proj), regions);
    return ops::layer_norm_rows(ops::add_row(sum, global), p.norm_gain, p.norm_bias, layer_norm_eps);
}

}  // namespace sail
