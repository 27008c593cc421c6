#pragma once

#include "sail/autodiff.hpp"
#include "sail/rng.hpp"

#include <string>

namespace sail {

/// Stacked per-head projections. Head i owns rows [i*d1, (i+1)*d1) of
/// `query` and `key` and rows [i*d2, (i+1)*d2) of `value`; `output` maps the
/// concatenated heads (heads*d2) to the output width.
struct MultiHeadParams {
    Var query;   // heads*d1 x d_q
    Var key;     // heads*d1 x d_k
    Var value;   // heads*d2 x d_v
    Var output;  // d_out x heads*d2
    std::size_t heads = 1;
};

struct MultiHeadDims {
    std::size_t query_in = 0;
    std::size_t key_in = 0;
    std::size_t value_in = 0;
    std::size_t model = 0;  // heads * d1 == heads * d2
    std::size_t out = 0;
    std::size_t heads = 1;
};

void add_multi_head_params(ParamStore& ps, Rng& rng, const std::string& prefix, const MultiHeadDims& dims);
MultiHeadParams bind_multi_head(Graph& g, const std::string& prefix, std::size_t heads);

/// Softmax(Q K^T / sqrt(d1)) V with one row per query position.
/// q: n1 x d1, k: n2 x d1, v: n2 x d2.
Var dot_atten(Var q, Var k, Var v);
Tensor dot_atten(const Tensor& q, const Tensor& k, const Tensor& v);
/// Row-stochastic attention weights of dot_atten, n1 x n2.
Tensor dot_atten_weights(const Tensor& q, const Tensor& k);

Var multi_head(Var q, Var k, Var v, const MultiHeadParams& p);

/// Self-attention where position i only attends to positions within
/// `window` of i, clipped at the sequence ends.
Var local_multi_head(Var f, std::size_t window, const MultiHeadParams& p);

struct AdditiveParams {
    Var query_proj;  // hidden x d_query
    Var key_proj;    // hidden x d
    Var scorer;      // hidden
};

struct AdditiveResult {
    Var context;  // 1 x d
    Var weights;  // 1 x T
};

/// scores_t = scorer . tanh(query_proj * query + key_proj * key_t),
/// weights = softmax(scores), context = sum_t weights_t key_t.
/// query: 1 x d_query, keys: T x d.
AdditiveResult additive_atten(Var query, Var keys, const AdditiveParams& p);

}  // namespace sail
