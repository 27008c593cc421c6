#pragma once

#include "sail/autodiff.hpp"

#include <functional>
#include <span>

namespace sail {

/// Builds the loss of one sample on a graph bound to the trained store.
using SampleLoss = std::function<Var(Graph&, std::size_t sample)>;

struct BatchResult {
    double loss = 0.0;  // mean over the batch
    bool finite = true;
};

/// Adds the mean-loss gradient over `batch` into params' gradient buffers.
/// Per-sample gradients are reduced in batch order, so the result does not
/// depend on the worker count.
BatchResult accumulate_batch(ParamStore& params, std::span<const std::size_t> batch, const SampleLoss& loss);

}  // namespace sail
