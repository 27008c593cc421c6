#include "sail/localizer.hpp"

#include "sail/error.hpp"
#include "sail/init.hpp"
#include "sail/ops.hpp"

#include <cmath>

namespace sail {

namespace {

void add_additive(ParamStore& ps, Rng& rng, const std::string& prefix, std::size_t dim, std::size_t hidden) {
    add_weight(ps, rng, prefix + ".query_proj", hidden, dim);
    add_weight(ps, rng, prefix + ".key_proj", hidden, dim);
    add_vector_weight(ps, rng, prefix + ".scorer", hidden);
}

void add_head(ParamStore& ps, Rng& rng, const std::string& prefix, std::size_t dim, std::size_t hidden) {
    add_weight(ps, rng, prefix + ".proj", hidden, dim);
    add_bias(ps, prefix + ".bias", hidden);
    add_vector_weight(ps, rng, prefix + ".scorer", hidden);
}

AdditiveParams bind_additive(Graph& g, const std::string& prefix) {
    return {g.param(prefix + ".query_proj"), g.param(prefix + ".key_proj"), g.param(prefix + ".scorer")};
}

BoundaryHead bind_head(Graph& g, const std::string& prefix) {
    return {g.param(prefix + ".proj"), g.param(prefix + ".bias"), g.param(prefix + ".scorer")};
}

Var directional(Var frames, const AdditiveParams& p, bool forward) {
    require(frames.rows() >= 1, ErrorKind::invalid_argument, "context aggregation: empty sequence");
    return ops::directional_context(ops::linear(frames, p.query_proj), ops::linear(frames, p.key_proj), p.scorer, frames, forward);
}

std::size_t argmax(std::span<const double> p) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i)
        if (p[i] > p[best]) best = i;
    return best;
}

void check_target(std::size_t n_start, std::size_t n_end, const Segment& t) {
    require(n_start == n_end && n_start >= 1, ErrorKind::dimension_mismatch, "nll: start/end distributions differ in length");
    const long n = static_cast<long>(n_start);
    require(t.s >= 1 && t.s <= n && t.e >= 1 && t.e <= n, ErrorKind::invalid_argument,
            "nll: ground truth (" + std::to_string(t.s) + ", " + std::to_string(t.e) + ") outside 1.." + std::to_string(n));
}

}  // namespace

std::string to_string(DecodeMode m) { return m == DecodeMode::independent ? "independent" : "constrained"; }

DecodeMode decode_mode_from_string(const std::string& s) {
    if (s == "independent") return DecodeMode::independent;
    if (s == "constrained") return DecodeMode::constrained;
    fail(ErrorKind::config, "unknown decode mode '" + s + "'");
}

void add_localizer_params(ParamStore& ps, Rng& rng, const std::string& prefix, std::size_t dim, std::size_t hidden) {
    add_additive(ps, rng, prefix + ".forward", dim, hidden);
    add_additive(ps, rng, prefix + ".backward", dim, hidden);
    add_head(ps, rng, prefix + ".start", dim, hidden);
    add_head(ps, rng, prefix + ".end", dim, hidden);
}

LocalizerParams bind_localizer(Graph& g, const std::string& prefix) {
    return {bind_additive(g, prefix + ".forward"), bind_additive(g, prefix + ".backward"), bind_head(g, prefix + ".start"),
            bind_head(g, prefix + ".end")};
}

Var forward_context(Var frames, const AdditiveParams& p) { return directional(frames, p, true); }

Var backward_context(Var frames, const AdditiveParams& p) { return directional(frames, p, false); }

Var boundary_distribution(Var contexts, const BoundaryHead& head) {
    const std::size_t n = contexts.rows(), hidden = head.scorer.value().size();
    Var act = ops::tanh(ops::linear(contexts, head.proj, head.bias));               // n x hidden
    Var logits = ops::matmul_nt(ops::reshape(head.scorer, {1, hidden}), act);       // 1 x n
    return ops::softmax_rows(ops::reshape(logits, {1, n}));
}

BoundaryDistributions localize(Var frames, const LocalizerParams& p, bool bidirectional) {
    if (!bidirectional) return {boundary_distribution(frames, p.start), boundary_distribution(frames, p.end)};
    return {boundary_distribution(forward_context(frames, p.forward), p.start),
            boundary_distribution(backward_context(frames, p.backward), p.end)};
}

Segment predict_boundaries(std::span<const double> p_start, std::span<const double> p_end, DecodeMode mode) {
    require(!p_start.empty() && p_start.size() == p_end.size(), ErrorKind::dimension_mismatch,
            "predict_boundaries: distributions of length " + std::to_string(p_start.size()) + " and " + std::to_string(p_end.size()));
    if (mode == DecodeMode::independent)
        return {static_cast<long>(argmax(p_start)) + 1, static_cast<long>(argmax(p_end)) + 1};
    const std::size_t n = p_start.size();
    std::size_t bs = 0, be = 0;
    double best = p_start[0] * p_end[0];
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = p_start[i] * p_end[j];
            if (v > best) {
                best = v;
                bs = i;
                be = j;
            }
        }
    return {static_cast<long>(bs) + 1, static_cast<long>(be) + 1};
}

Var sample_nll(Var p_start, Var p_end, const Segment& target) {
    check_target(p_start.value().size(), p_end.value().size(), target);
    Var ls = ops::log_clamped(ops::pick(p_start, static_cast<std::size_t>(target.s - 1)), probability_floor);
    Var le = ops::log_clamped(ops::pick(p_end, static_cast<std::size_t>(target.e - 1)), probability_floor);
    return ops::scale(ops::add(ls, le), -1.0);
}

double sample_nll(std::span<const double> p_start, std::span<const double> p_end, const Segment& target) {
    check_target(p_start.size(), p_end.size(), target);
    return -(std::log(std::max(p_start[target.s - 1], probability_floor)) + std::log(std::max(p_end[target.e - 1], probability_floor)));
}

double nll_loss(const std::vector<LabelledDistributions>& batch) {
    require(!batch.empty(), ErrorKind::invalid_argument, "nll_loss: empty batch");
    double total = 0.0;
    for (const auto& b : batch) total += sample_nll(b.p_start, b.p_end, b.target);
    return total / static_cast<double>(batch.size());
}

}  // namespace sail
