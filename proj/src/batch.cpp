#include "sail/batch.hpp"

#include "sail/error.hpp"
#include "sail/kernels.hpp"

#include <cmath>
#include <exception>

namespace sail {

BatchResult accumulate_batch(ParamStore& params, std::span<const std::size_t> batch, const SampleLoss& loss) {
    require(!batch.empty(), ErrorKind::invalid_argument, "accumulate_batch: empty batch");
    const std::size_t count = batch.size();
    std::vector<Gradients> grads(count);
    std::vector<double> losses(count, 0.0);
    std::vector<std::exception_ptr> errors(count);
    const ParamStore& frozen = params;
    const int workers = kernels::threads();

#pragma omp parallel for schedule(dynamic, 1) num_threads(workers) if (workers > 1)
    for (std::size_t b = 0; b < count; ++b) {
        try {
            Graph g(frozen);
            Var l = loss(g, batch[b]);
            losses[b] = l.value()[0];
            g.backward(l);
            grads[b] = frozen.zeros_like();
            g.collect_param_grads(grads[b]);
        } catch (...) {
            errors[b] = std::current_exception();
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);

    BatchResult result;
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t b = 0; b < count; ++b) {
        result.loss += losses[b];
        params.add_to_grads(grads[b], inv);
    }
    result.loss *= inv;
    result.finite = std::isfinite(result.loss);
    return result;
}

}  // namespace sail
