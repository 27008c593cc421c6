#include "sail/attention.hpp"

#include "sail/error.hpp"
#include "sail/init.hpp"
#include "sail/ops.hpp"

#include <cmath>

namespace sail {

void add_multi_head_params(ParamStore& ps, Rng& rng, const std::string& prefix, const MultiHeadDims& d) {
    require(d.heads > 0 && d.model % d.heads == 0, ErrorKind::config,
            prefix + ": attention width " + std::to_string(d.model) + " not divisible by " + std::to_string(d.heads) + " heads");
    add_weight(ps, rng, prefix + ".query", d.model, d.query_in);
    add_weight(ps, rng, prefix + ".key", d.model, d.key_in);
    add_weight(ps, rng, prefix + ".value", d.model, d.value_in);
    add_weight(ps, rng, prefix + ".output", d.out, d.model);
}

MultiHeadParams bind_multi_head(Graph& g, const std::string& prefix, std::size_t heads) {
    return {g.param(prefix + ".query"), g.param(prefix + ".key"), g.param(prefix + ".value"), g.param(prefix + ".output"), heads};
}

Var dot_atten(Var q, Var k, Var v) { return ops::attention(q, k, v, 1, -1); }

Tensor dot_atten(const Tensor& q, const Tensor& k, const Tensor& v) {
    Graph g;
    return g.value(dot_atten(g.constant(q), g.constant(k), g.constant(v)));
}

Tensor dot_atten_weights(const Tensor& q, const Tensor& k) {
    require(q.cols() == k.cols(), ErrorKind::dimension_mismatch, "dot_atten_weights: query/key widths differ");
    Graph g;
    Var scores = ops::scale(ops::matmul_nt(g.constant(q), g.constant(k)), 1.0 / std::sqrt(static_cast<double>(q.cols())));
    return g.value(ops::softmax_rows(scores));
}

namespace {

Var projected_attention(Var q, Var k, Var v, const MultiHeadParams& p, long window) {
    Var qp = ops::linear(q, p.query);
    Var kp = ops::linear(k, p.key);
    Var vp = ops::linear(v, p.value);
    return ops::linear(ops::attention(qp, kp, vp, p.heads, window), p.output);
}

}  // namespace

Var multi_head(Var q, Var k, Var v, const MultiHeadParams& p) { return projected_attention(q, k, v, p, -1); }

Var local_multi_head(Var f, std::size_t window, const MultiHeadParams& p) {
    require(f.rows() >= 1, ErrorKind::invalid_argument, "local_multi_head: empty sequence");
    return projected_attention(f, f, f, p, static_cast<long>(window));
}

AdditiveResult additive_atten(Var query, Var keys, const AdditiveParams& p) {
    require(keys.rows() >= 1, ErrorKind::invalid_argument, "additive_atten: needs at least one key");
    require(query.rows() == 1, ErrorKind::dimension_mismatch, "additive_atten: query must be a single row");
    const std::size_t hidden = p.scorer.value().size();
    Var hq = ops::linear(query, p.query_proj);                          // 1 x hidden
    Var hk = ops::linear(keys, p.key_proj);                             // T x hidden
    Var act = ops::tanh(ops::add_row(hk, ops::reshape(hq, {hidden})));  // T x hidden
    Var scores = ops::matmul_nt(ops::reshape(p.scorer, {1, hidden}), act);  // 1 x T
    Var weights = ops::softmax_rows(scores);
    return {ops::matmul(weights, keys), weights};
}

}  // namespace sail
