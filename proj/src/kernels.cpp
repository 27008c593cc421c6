#include "sail/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sail::kernels {

namespace {
int g_threads = 1;

using index_t = long;  // OpenMP loops want a signed induction variable

// exp-based tanh, absolute error below 4e-16; small arguments go through
// std::tanh to keep the relative error small as well.
inline double fast_tanh(double x) {
    const double ax = std::fabs(x);
    if (ax < 0.0625) return std::tanh(x);
    if (ax > 19.0) return std::copysign(1.0, x);
    const double e = std::exp(2.0 * ax);
    return std::copysign((e - 1.0) / (e + 1.0), x);
}
}  // namespace

void set_threads(int n) { g_threads = std::max(1, n); }
int threads() { return g_threads; }

std::size_t AttentionShape::lo(std::size_t i) const noexcept {
    if (window < 0) return 0;
    const auto w = static_cast<std::size_t>(window);
    return i > w ? i - w : 0;
}

std::size_t AttentionShape::hi(std::size_t i) const noexcept {
    if (window < 0) return n_kv - 1;
    return std::min(n_kv - 1, i + static_cast<std::size_t>(window));
}

std::size_t ContextShape::offset(std::size_t i) const noexcept {
    if (!forward) return i * (i + 1) / 2;
    return i == 0 ? 0 : i * n - i * (i - 1) / 2;
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m, bool accumulate) {
#pragma omp parallel for num_threads(g_threads) if (g_threads > 1) schedule(static)
    for (index_t i = 0; i < static_cast<index_t>(n); ++i) {
        double* ci = c + i * m;
        if (!accumulate) std::fill(ci, ci + m, 0.0);
        const double* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + p * m;
            for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
        }
    }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m, bool accumulate) {
    // Row-wise axpy over B^T; every c_ij still sums its k products in
    // ascending p, so results equal the plain dot-product loop.
    std::vector<double> bt(k * m);
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t p = 0; p < k; ++p) bt[p * m + j] = b[j * k + p];
#pragma omp parallel num_threads(g_threads) if (g_threads > 1)
    {
        std::vector<double> acc(m);
#pragma omp for schedule(static)
        for (index_t i = 0; i < static_cast<index_t>(n); ++i) {
            const double* ai = a + i * k;
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t p = 0; p < k; ++p) {
                const double av = ai[p];
                const double* bp = bt.data() + p * m;
                for (std::size_t j = 0; j < m; ++j) acc[j] += av * bp[j];
            }
            double* ci = c + i * m;
            if (accumulate)
                for (std::size_t j = 0; j < m; ++j) ci[j] += acc[j];
            else
                std::copy(acc.begin(), acc.end(), ci);
        }
    }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m, bool accumulate) {
#pragma omp parallel for num_threads(g_threads) if (g_threads > 1) schedule(static)
    for (index_t p = 0; p < static_cast<index_t>(k); ++p) {
        double* cp = c + p * m;
        if (!accumulate) std::fill(cp, cp + m, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            const double av = a[r * k + p];
            const double* br = b + r * m;
            for (std::size_t j = 0; j < m; ++j) cp[j] += av * br[j];
        }
    }
}

void attention_forward(const AttentionShape& s, const double* q, const double* k, const double* v, double* out, double* probs) {
    const std::size_t qk_stride = s.heads * s.key_dim;
    const std::size_t v_stride = s.heads * s.value_dim;
    std::fill(probs, probs + s.heads * s.n_q * s.n_kv, 0.0);
#pragma omp parallel for num_threads(g_threads) if (g_threads > 1) schedule(static)
    for (index_t ii = 0; ii < static_cast<index_t>(s.n_q); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const std::size_t lo = s.lo(i), hi = s.hi(i);
        for (std::size_t h = 0; h < s.heads; ++h) {
            const double* qi = q + i * qk_stride + h * s.key_dim;
            double* p = probs + (h * s.n_q + i) * s.n_kv;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = lo; j <= hi; ++j) {
                const double* kj = k + j * qk_stride + h * s.key_dim;
                double dot = 0.0;
                for (std::size_t c = 0; c < s.key_dim; ++c) dot += qi[c] * kj[c];
                p[j] = dot * s.scale;
                mx = std::max(mx, p[j]);
            }
            double z = 0.0;
            for (std::size_t j = lo; j <= hi; ++j) {
                p[j] = std::exp(p[j] - mx);
                z += p[j];
            }
            for (std::size_t j = lo; j <= hi; ++j) p[j] /= z;
            double* oi = out + i * v_stride + h * s.value_dim;
            std::fill(oi, oi + s.value_dim, 0.0);
            for (std::size_t j = lo; j <= hi; ++j) {
                const double* vj = v + j * v_stride + h * s.value_dim;
                for (std::size_t c = 0; c < s.value_dim; ++c) oi[c] += p[j] * vj[c];
            }
        }
    }
}

void attention_backward(const AttentionShape& s, const double* q, const double* k, const double* v, const double* probs,
                        const double* dout, double* dq, double* dk, double* dv, double* scratch) {
    const std::size_t qk_stride = s.heads * s.key_dim;
    const std::size_t v_stride = s.heads * s.value_dim;
    // Pass 1: per query row, score gradients and dq.
#pragma omp parallel for num_threads(g_threads) if (g_threads > 1) schedule(static)
    for (index_t ii = 0; ii < static_cast<index_t>(s.n_q); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const std::size_t lo = s.lo(i), hi = s.hi(i);
        for (std::size_t h = 0; h < s.heads; ++h) {
            const double* p = probs + (h * s.n_q + i) * s.n_kv;
            double* ds = scratch + (h * s.n_q + i) * s.n_kv;
            const double* doi = dout + i * v_stride + h * s.value_dim;
            double dot = 0.0;
            for (std::size_t j = lo; j <= hi; ++j) {
                const double* vj = v + j * v_stride + h * s.value_dim;
                double dp = 0.0;
                for (std::size_t c = 0; c < s.value_dim; ++c) dp += doi[c] * vj[c];
                ds[j] = dp;
                dot += p[j] * dp;
            }
            for (std::size_t j = lo; j <= hi; ++j) ds[j] = p[j] * (ds[j] - dot) * s.scale;
            double* dqi = dq + i * qk_stride + h * s.key_dim;
            for (std::size_t j = lo; j <= hi; ++j) {
                const double* kj = k + j * qk_stride + h * s.key_dim;
                for (std::size_t c = 0; c < s.key_dim; ++c) dqi[c] += ds[j] * kj[c];
            }
        }
    }
    // Pass 2: per key row, sum over the queries that see it in ascending order.
#pragma omp parallel for num_threads(g_threads) if (g_threads > 1) schedule(static)
    for (index_t jj = 0; jj < static_cast<index_t>(s.n_kv); ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        std::size_t i_lo = 0, i_hi = s.n_q - 1;
        if (s.window >= 0) {
            const auto w = static_cast<std::size_t>(s.window);
            i_lo = j > w ? j - w : 0;
            i_hi = std::min(s.n_q - 1, j + w);
        }
        for (std::size_t h = 0; h < s.heads; ++h) {
            double* dkj = dk + j * qk_stride + h * s.key_dim;
            double* dvj = dv + j * v_stride + h * s.value_dim;
            for (std::size_t i = i_lo; i <= i_hi; ++i) {
                const double pij = probs[(h * s.n_q + i) * s.n_kv + j];
                const double dsij = scratch[(h * s.n_q + i) * s.n_kv + j];
                const double* qi = q + i * qk_stride + h * s.key_dim;
                const double* doi = dout + i * v_stride + h * s.value_dim;
                for (std::size_t c = 0; c < s.key_dim; ++c) dkj[c] += dsij * qi[c];
                for (std::size_t c = 0; c < s.value_dim; ++c) dvj[c] += pij * doi[c];
            }
        }
    }
}

void context_forward(const ContextShape& s, const double* a, const double* b, const double* w, const double* x, double* out,
                     double* tanh_cache, double* weights) {
#pragma omp parallel for num_threads(g_threads) if (g_threads > 1) schedule(dynamic, 4)
    for (index_t ii = 0; ii < static_cast<index_t>(s.n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const std::size_t first = s.first(i), last = s.last(i), base = s.offset(i);
        const double* ai = a + i * s.hidden;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t t = first; t <= last; ++t) {
            const std::size_t pk = base + (t - first);
            const double* bt = b + t * s.hidden;
            double* th = tanh_cache + pk * s.hidden;
            double score = 0.0;
            for (std::size_t c = 0; c < s.hidden; ++c) {
                th[c] = fast_tanh(ai[c] + bt[c]);
                score += w[c] * th[c];
            }
            weights[pk] = score;
            mx = std::max(mx, score);
        }
        double z = 0.0;
        for (std::size_t t = first; t <= last; ++t) {
            double& e = weights[base + (t - first)];
            e = std::exp(e - mx);
            z += e;
        }
        double* oi = out + i * s.dim;
        std::fill(oi, oi + s.dim, 0.0);
        for (std::size_t t = first; t <= last; ++t) {
            double& wt = weights[base + (t - first)];
            wt /= z;
            const double* xt = x + t * s.dim;
            for (std::size_t c = 0; c < s.dim; ++c) oi[c] += wt * xt[c];
        }
    }
}

void context_backward(const ContextShape& s, const double* w, const double* x, const double* tanh_cache, const double* weights,
                      const double* dout, double* da, double* db, double* dw, double* dx, double* scratch) {
    double* g = scratch;                   // pairs(): score gradients
    double* dw_rows = scratch + s.pairs();  // n x hidden partial dw per query
#pragma omp parallel for num_threads(g_threads) if (g_threads > 1) schedule(dynamic, 4)
    for (index_t ii = 0; ii < static_cast<index_t>(s.n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const std::size_t first = s.first(i), last = s.last(i), base = s.offset(i);
        const double* doi = dout + i * s.dim;
        double dot = 0.0;
        for (std::size_t t = first; t <= last; ++t) {
            const std::size_t pk = base + (t - first);
            const double* xt = x + t * s.dim;
            double dalpha = 0.0;
            for (std::size_t c = 0; c < s.dim; ++c) dalpha += doi[c] * xt[c];
            g[pk] = dalpha;
            dot += weights[pk] * dalpha;
        }
        double* dai = da + i * s.hidden;
        double* dwi = dw_rows + i * s.hidden;
        std::fill(dwi, dwi + s.hidden, 0.0);
        for (std::size_t t = first; t <= last; ++t) {
            const std::size_t pk = base + (t - first);
            g[pk] = weights[pk] * (g[pk] - dot);
            const double* th = tanh_cache + pk * s.hidden;
            for (std::size_t c = 0; c < s.hidden; ++c) {
                dai[c] += g[pk] * w[c] * (1.0 - th[c] * th[c]);
                dwi[c] += g[pk] * th[c];
            }
        }
    }
    for (std::size_t i = 0; i < s.n; ++i)
        for (std::size_t c = 0; c < s.hidden; ++c) dw[c] += dw_rows[i * s.hidden + c];

#pragma omp parallel for num_threads(g_threads) if (g_threads > 1) schedule(dynamic, 4)
    for (index_t tt = 0; tt < static_cast<index_t>(s.n); ++tt) {
        const auto t = static_cast<std::size_t>(tt);
        // Queries whose candidate set contains t.
        const std::size_t i_lo = s.forward ? 0 : t;
        const std::size_t i_hi = s.forward ? t : s.n - 1;
        double* dbt = db + t * s.hidden;
        double* dxt = dx + t * s.dim;
        for (std::size_t i = i_lo; i <= i_hi; ++i) {
            const std::size_t pk = s.offset(i) + (t - s.first(i));
            const double* th = tanh_cache + pk * s.hidden;
            for (std::size_t c = 0; c < s.hidden; ++c) dbt[c] += g[pk] * w[c] * (1.0 - th[c] * th[c]);
            const double* doi = dout + i * s.dim;
            for (std::size_t c = 0; c < s.dim; ++c) dxt[c] += weights[pk] * doi[c];
        }
    }
}

}  // namespace sail::kernels
