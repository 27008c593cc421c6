#pragma once

#include "sail/autodiff.hpp"

#include <initializer_list>
#include <vector>

// Differentiable primitives recorded on a Graph. Matrices are row-major with
// one row per sequence position; weights are stored out x in, so a dense
// layer is x * W^T + b.
namespace sail::ops {

Var matmul(Var a, Var b);     // (n x k) * (k x m)
Var matmul_nt(Var a, Var b);  // (n x k) * (m x k)^T
Var linear(Var x, Var weight);
Var linear(Var x, Var weight, Var bias);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// Adds a length-cols vector to every row.
Var add_row(Var x, Var row);
Var scale(Var a, double c);

Var tanh(Var a);
Var relu(Var a);
Var sigmoid(Var a);
/// log(max(a, floor)); gradient is zero where the clamp is active.
Var log_clamped(Var a, double floor);

Var softmax_rows(Var a);
/// Per-row normalisation with population variance, then gain * x + bias.
Var layer_norm_rows(Var x, Var gain, Var bias, double eps);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(Var a, std::size_t begin, std::size_t end);
Var reshape(Var a, std::vector<std::size_t> dims);

Var sum(Var a);
/// Single element by flat index, as a scalar.
Var pick(Var a, std::size_t flat_index);

/// Multi-head scaled dot-product attention over projected inputs.
/// q: n_q x (heads*dk), k: n_kv x (heads*dk), v: n_kv x (heads*dv).
/// window < 0 attends globally; otherwise query i sees keys within
/// distance `window`, clipped at the sequence ends. Scale is 1/sqrt(dk).
Var attention(Var q, Var k, Var v, std::size_t heads, long window);

/// Directional additive aggregation: row i of the output is the softmax-
/// weighted sum of x rows t >= i (forward) or t <= i (backward) with
/// scores w . tanh(a_i + b_t).
Var directional_context(Var a, Var b, Var w, Var x, bool forward);

}  // namespace sail::ops
