#include "sail/core.hpp"

#include "sail/error.hpp"
#include "sail/ops.hpp"

namespace sail {

Tensor softmax_rows(const Tensor& x) {
    require(x.cols() > 0, ErrorKind::invalid_argument, "softmax_rows: empty row");
    require(x.all_finite(), ErrorKind::non_finite, "softmax_rows: non-finite input");
    Graph g;
    return g.value(ops::softmax_rows(g.constant(x)));
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    require(eps > 0.0, ErrorKind::invalid_argument, "layer_norm: eps must be positive");
    Graph g;
    return g.value(ops::layer_norm_rows(g.constant(x), g.constant(gain), g.constant(bias), eps)).reshaped(x.dims());
}

}  // namespace sail
