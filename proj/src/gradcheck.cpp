#include "sail/gradcheck.hpp"

#include "sail/error.hpp"

#include <algorithm>
#include <cmath>

namespace sail {

namespace {

double evaluate(const LossBuilder& loss, const ParamStore& params) {
    Graph g(params);
    return g.value(loss(g))[0];
}

double central_difference(const LossBuilder& loss, ParamStore& params, double& w, double h) {
    const double saved = w;
    w = saved + h;
    const double up = evaluate(loss, params);
    w = saved - h;
    const double down = evaluate(loss, params);
    w = saved;
    return (up - down) / (2.0 * h);
}

}  // namespace

Gradients analytic_gradients(const LossBuilder& loss, const ParamStore& params) {
    Graph g(params);
    Var l = loss(g);
    g.backward(l);
    Gradients out = params.zeros_like();
    g.collect_param_grads(out);
    return out;
}

GradCheckReport grad_check(const LossBuilder& loss, ParamStore& params, const Gradients& analytic, const GradCheckOptions& opt) {
    require(analytic.size() == params.size(), ErrorKind::dimension_mismatch, "grad_check: gradient buffer does not match store");
    GradCheckReport report;
    for (std::size_t p = 0; p < params.size(); ++p) {
        GradCheckEntry entry;
        entry.name = params.name(p);
        auto w = params.value(p).data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            double numeric = central_difference(loss, params, w[i], opt.step);
            if (opt.richardson) numeric = (4.0 * central_difference(loss, params, w[i], opt.step / 2) - numeric) / 3.0;
            if (!std::isfinite(numeric)) {
                report.finite = false;
                entry.max_rel_error = INFINITY;
                entry.worst_index = i;
                continue;
            }
            const double a = analytic[p][i];
            const double abs_err = std::abs(a - numeric);
            const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), opt.floor});
            entry.max_abs_error = std::max(entry.max_abs_error, abs_err);
            if (rel > entry.max_rel_error || std::isnan(rel)) {
                entry.max_rel_error = rel;
                entry.worst_index = i;
            }
        }
        if (!(entry.max_rel_error <= report.max_rel_error)) {
            report.max_rel_error = entry.max_rel_error;
            report.worst_param = entry.name;
        }
        report.entries.push_back(std::move(entry));
    }
    report.passed = report.finite && report.max_rel_error < opt.tolerance;
    return report;
}

GradCheckReport grad_check(const LossBuilder& loss, ParamStore& params, const GradCheckOptions& opt) {
    return grad_check(loss, params, analytic_gradients(loss, params), opt);
}

}  // namespace sail
