#pragma once

#include "sail/attention.hpp"
#include "sail/autodiff.hpp"
#include "sail/rng.hpp"
#include "sail/types.hpp"

#include <string>
#include <vector>

namespace sail {

struct BoundaryHead {
    Var proj;    // hidden x d
    Var bias;    // hidden
    Var scorer;  // hidden
};

struct LocalizerParams {
    AdditiveParams forward;
    AdditiveParams backward;
    BoundaryHead start;
    BoundaryHead end;
};

enum class DecodeMode { independent, constrained };

std::string to_string(DecodeMode m);
DecodeMode decode_mode_from_string(const std::string& s);

struct BoundaryPrediction {
    std::vector<double> p_start;
    std::vector<double> p_end;
    Segment segment;  // 1-based
};

void add_localizer_params(ParamStore& ps, Rng& rng, const std::string& prefix, std::size_t dim, std::size_t hidden);
LocalizerParams bind_localizer(Graph& g, const std::string& prefix);

/// Row i aggregates frames t >= i with additive attention scored against
/// frame i.
Var forward_context(Var frames, const AdditiveParams& p);
/// Row i aggregates frames t <= i.
Var backward_context(Var frames, const AdditiveParams& p);

/// 1 x n distribution softmax(w . tanh(W h_i + b)).
Var boundary_distribution(Var contexts, const BoundaryHead& head);

struct BoundaryDistributions {
    Var start;  // 1 x n
    Var end;    // 1 x n
};

/// Start distribution from forward contexts, end from backward contexts.
/// Without bidirectional aggregation both heads read the frames directly.
BoundaryDistributions localize(Var frames, const LocalizerParams& p, bool bidirectional = true);

/// Independent: per-distribution argmax. Constrained: argmax of
/// p_s[i] * p_e[j] over i <= j. Ties go to the smallest index.
Segment predict_boundaries(std::span<const double> p_start, std::span<const double> p_end, DecodeMode mode);

inline constexpr double probability_floor = 1e-12;

/// -(log p_s[s] + log p_e[e]) with probabilities clamped at 1e-12.
Var sample_nll(Var p_start, Var p_end, const Segment& target);
double sample_nll(std::span<const double> p_start, std::span<const double> p_end, const Segment& target);

struct LabelledDistributions {
    std::vector<double> p_start;
    std::vector<double> p_end;
    Segment target;
};

/// Mean of sample_nll over the batch.
double nll_loss(const std::vector<LabelledDistributions>& batch);

}  // namespace sail
