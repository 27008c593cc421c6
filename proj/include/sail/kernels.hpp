#pragma once

#include <cstddef>
#include <vector>

// Hot loops of the model. The functions in sail::kernels are the production
// path and carry OpenMP work-sharing; every output element is computed by a
// single thread with a fixed summation order, so results are bit-identical for
// any thread count. sail::kernels::reference holds naive serial versions that
// the tests and the benchmark compare against.
namespace sail::kernels {

void set_threads(int n);
int threads();

// Row-major, leading dimension == column count.
// C(n x m) = A(n x k) * B(k x m), added into C when accumulate is set.
void gemm_nn(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m, bool accumulate);
// C(n x m) = A(n x k) * B(m x k)^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m, bool accumulate);
// C(k x m) = A(n x k)^T * B(n x m)
void gemm_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m, bool accumulate);

/// Shape of a multi-head attention call over already projected inputs.
/// q: n_q x (heads*key_dim), k: n_kv x (heads*key_dim), v: n_kv x (heads*value_dim).
/// window < 0 means global attention; otherwise query i sees keys
/// [i - window, i + window] clipped to the sequence (requires n_q == n_kv).
struct AttentionShape {
    std::size_t n_q = 0;
    std::size_t n_kv = 0;
    std::size_t heads = 1;
    std::size_t key_dim = 0;
    std::size_t value_dim = 0;
    long window = -1;
    double scale = 1.0;

    std::size_t lo(std::size_t i) const noexcept;
    std::size_t hi(std::size_t i) const noexcept;  // inclusive
};

/// probs receives heads x n_q x n_kv weights (zero outside the window).
void attention_forward(const AttentionShape& s, const double* q, const double* k, const double* v, double* out, double* probs);
/// Gradients are accumulated into dq, dk, dv. scratch: heads x n_q x n_kv.
void attention_backward(const AttentionShape& s, const double* q, const double* k, const double* v, const double* probs,
                        const double* dout, double* dq, double* dk, double* dv, double* scratch);

/// Directional additive aggregation. For query i the candidate set is
/// t in [i, n) (forward) or [0, i] (backward); score(i,t) = w . tanh(a_i + b_t),
/// weights are the softmax over candidates and out_i = sum_t weight * x_t.
/// a, b: n x hidden, x: n x dim.
struct ContextShape {
    std::size_t n = 0;
    std::size_t hidden = 0;
    std::size_t dim = 0;
    bool forward = true;

    std::size_t first(std::size_t i) const noexcept { return forward ? i : 0; }
    std::size_t last(std::size_t i) const noexcept { return forward ? n - 1 : i; }
    std::size_t count(std::size_t i) const noexcept { return last(i) - first(i) + 1; }
    /// Offset of query i's block in triangular per-pair storage.
    std::size_t offset(std::size_t i) const noexcept;
    std::size_t pairs() const noexcept { return n * (n + 1) / 2; }
};

/// tanh_cache: pairs() x hidden, weights: pairs().
void context_forward(const ContextShape& s, const double* a, const double* b, const double* w, const double* x, double* out,
                     double* tanh_cache, double* weights);
/// Accumulates into da, db, dw, dx. scratch: pairs() + n*hidden doubles.
void context_backward(const ContextShape& s, const double* w, const double* x, const double* tanh_cache, const double* weights,
                      const double* dout, double* da, double* db, double* dw, double* dx, double* scratch);

namespace reference {

void gemm_nn(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m, bool accumulate);
void gemm_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m, bool accumulate);
void gemm_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m, bool accumulate);
void attention_forward(const AttentionShape& s, const double* q, const double* k, const double* v, double* out, double* probs);
void attention_backward(const AttentionShape& s, const double* q, const double* k, const double* v, const double* probs,
                        const double* dout, double* dq, double* dk, double* dv);
void context_forward(const ContextShape& s, const double* a, const double* b, const double* w, const double* x, double* out,
                     double* tanh_cache, double* weights);
void context_backward(const ContextShape& s, const double* w, const double* x, const double* tanh_cache, const double* weights,
                      const double* dout, double* da, double* db, double* dw, double* dx);

}  // namespace reference

}  // namespace sail::kernels
