#pragma once

#include "sail/tensor.hpp"

namespace sail {

inline constexpr double layer_norm_eps = 1e-5;

/// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& x);

/// gain * (x - mean) / sqrt(var + eps) + bias, population variance, applied
/// to every row (a rank-1 input is a single row).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = layer_norm_eps);

}  // namespace sail
