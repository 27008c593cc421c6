#include "sail/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sail::kernels::reference {

void gemm_nn(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m, bool accumulate) {
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * m + j];
            c[i * m + j] = accumulate ? c[i * m + j] + acc : acc;
        }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m, bool accumulate) {
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
            c[i * m + j] = accumulate ? c[i * m + j] + acc : acc;
        }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m, bool accumulate) {
    for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < n; ++r) acc += a[r * k + p] * b[r * m + j];
            c[p * m + j] = accumulate ? c[p * m + j] + acc : acc;
        }
}

void attention_forward(const AttentionShape& s, const double* q, const double* k, const double* v, double* out, double* probs) {
    const std::size_t qs = s.heads * s.key_dim, vs = s.heads * s.value_dim;
    std::fill(probs, probs + s.heads * s.n_q * s.n_kv, 0.0);
    for (std::size_t h = 0; h < s.heads; ++h)
        for (std::size_t i = 0; i < s.n_q; ++i) {
            std::vector<double> score(s.n_kv, -std::numeric_limits<double>::infinity());
            for (std::size_t j = s.lo(i); j <= s.hi(i); ++j) {
                double dot = 0.0;
                for (std::size_t c = 0; c < s.key_dim; ++c) dot += q[i * qs + h * s.key_dim + c] * k[j * qs + h * s.key_dim + c];
                score[j] = s.scale * dot;
            }
            const double mx = *std::max_element(score.begin(), score.end());
            double z = 0.0;
            for (std::size_t j = 0; j < s.n_kv; ++j) z += std::exp(score[j] - mx);
            for (std::size_t c = 0; c < s.value_dim; ++c) {
                double acc = 0.0;
                for (std::size_t j = 0; j < s.n_kv; ++j) acc += std::exp(score[j] - mx) / z * v[j * vs + h * s.value_dim + c];
                out[i * vs + h * s.value_dim + c] = acc;
            }
            for (std::size_t j = 0; j < s.n_kv; ++j) probs[(h * s.n_q + i) * s.n_kv + j] = std::exp(score[j] - mx) / z;
        }
}

void attention_backward(const AttentionShape& s, const double* q, const double* k, const double* v, const double* probs,
                        const double* dout, double* dq, double* dk, double* dv) {
    const std::size_t qs = s.heads * s.key_dim, vs = s.heads * s.value_dim;
    for (std::size_t h = 0; h < s.heads; ++h)
        for (std::size_t i = 0; i < s.n_q; ++i) {
            const double* p = probs + (h * s.n_q + i) * s.n_kv;
            std::vector<double> dp(s.n_kv, 0.0);
            double dot = 0.0;
            for (std::size_t j = 0; j < s.n_kv; ++j) {
                for (std::size_t c = 0; c < s.value_dim; ++c) dp[j] += dout[i * vs + h * s.value_dim + c] * v[j * vs + h * s.value_dim + c];
                dot += p[j] * dp[j];
            }
            for (std::size_t j = 0; j < s.n_kv; ++j) {
                const double ds = p[j] * (dp[j] - dot);
                for (std::size_t c = 0; c < s.key_dim; ++c) {
                    dq[i * qs + h * s.key_dim + c] += s.scale * ds * k[j * qs + h * s.key_dim + c];
                    dk[j * qs + h * s.key_dim + c] += s.scale * ds * q[i * qs + h * s.key_dim + c];
                }
                for (std::size_t c = 0; c < s.value_dim; ++c) dv[j * vs + h * s.value_dim + c] += p[j] * dout[i * vs + h * s.value_dim + c];
            }
        }
}

namespace {
bool in_range(const ContextShape& s, std::size_t i, std::size_t t) { return s.forward ? t >= i : t <= i; }
}  // namespace

void context_forward(const ContextShape& s, const double* a, const double* b, const double* w, const double* x, double* out,
                     double* tanh_cache, double* weights) {
    for (std::size_t i = 0; i < s.n; ++i) {
        std::vector<double> score(s.n, -std::numeric_limits<double>::infinity());
        for (std::size_t t = 0; t < s.n; ++t) {
            if (!in_range(s, i, t)) continue;
            double acc = 0.0;
            for (std::size_t c = 0; c < s.hidden; ++c) {
                const double th = std::tanh(a[i * s.hidden + c] + b[t * s.hidden + c]);
                tanh_cache[(s.offset(i) + t - s.first(i)) * s.hidden + c] = th;
                acc += w[c] * th;
            }
            score[t] = acc;
        }
        const double mx = *std::max_element(score.begin(), score.end());
        double z = 0.0;
        for (double sc : score) z += std::exp(sc - mx);
        for (std::size_t c = 0; c < s.dim; ++c) out[i * s.dim + c] = 0.0;
        for (std::size_t t = 0; t < s.n; ++t) {
            if (!in_range(s, i, t)) continue;
            const double alpha = std::exp(score[t] - mx) / z;
            weights[s.offset(i) + t - s.first(i)] = alpha;
            for (std::size_t c = 0; c < s.dim; ++c) out[i * s.dim + c] += alpha * x[t * s.dim + c];
        }
    }
}

void context_backward(const ContextShape& s, const double* w, const double* x, const double* tanh_cache, const double* weights,
                      const double* dout, double* da, double* db, double* dw, double* dx) {
    for (std::size_t i = 0; i < s.n; ++i) {
        std::vector<double> dalpha(s.n, 0.0);
        double dot = 0.0;
        for (std::size_t t = 0; t < s.n; ++t) {
            if (!in_range(s, i, t)) continue;
            const double alpha = weights[s.offset(i) + t - s.first(i)];
            for (std::size_t c = 0; c < s.dim; ++c) {
                dalpha[t] += dout[i * s.dim + c] * x[t * s.dim + c];
                dx[t * s.dim + c] += alpha * dout[i * s.dim + c];
            }
            dot += alpha * dalpha[t];
        }
        for (std::size_t t = 0; t < s.n; ++t) {
            if (!in_range(s, i, t)) continue;
            const std::size_t pk = s.offset(i) + t - s.first(i);
            const double g = weights[pk] * (dalpha[t] - dot);
            for (std::size_t c = 0; c < s.hidden; ++c) {
                const double th = tanh_cache[pk * s.hidden + c];
                const double du = g * w[c] * (1.0 - th * th);
                da[i * s.hidden + c] += du;
                db[t * s.hidden + c] += du;
                dw[c] += g * th;
            }
        }
    }
}

}  // namespace sail::kernels::reference
