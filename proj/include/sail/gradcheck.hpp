#pragma once

#include "sail/autodiff.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sail {

/// Builds a scalar loss on the given graph (bound to the checked store).
using LossBuilder = std::function<Var(Graph&)>;

struct GradCheckOptions {
    double step = 1e-4;
    double tolerance = 1e-4;
    /// Denominator floor of the relative error |a - n| / max(|a|, |n|, floor);
    /// keeps gradients at round-off scale from dominating the report.
    double floor = 1e-6;
    /// Combine steps h and h/2 to cancel the h^2 error term of the central
    /// difference.
    bool richardson = true;
};

struct GradCheckEntry {
    std::string name;
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::size_t worst_index = 0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_error = 0.0;
    std::string worst_param;
    bool finite = true;
    bool passed = false;
};

/// Analytic gradient of `loss` w.r.t. every parameter (zero if unreached).
Gradients analytic_gradients(const LossBuilder& loss, const ParamStore& params);

/// Compares `analytic` against central differences of `loss` over every
/// scalar of every parameter. Parameters are restored afterwards.
GradCheckReport grad_check(const LossBuilder& loss, ParamStore& params, const Gradients& analytic, const GradCheckOptions& opt = {});
GradCheckReport grad_check(const LossBuilder& loss, ParamStore& params, const GradCheckOptions& opt = {});

}  // namespace sail
